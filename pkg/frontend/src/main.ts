/** Browser entry point: mount the app shell onto #app. */

import { App } from "./ui/app.js";

const host = document.getElementById("app");
if (host) {
  const app = new App(window.location.origin);
  host.append(app.root);
}
