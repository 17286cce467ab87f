// Browser entry point: wire real dependencies and mount the app.

import { ServerApi } from './api.js';
import { App } from './app.js';
import { MediaRecorderAdapter } from './recorder.js';

const root = document.getElementById('app');
if (!root) throw new Error('missing #app mount point');

const app = new App({
  root,
  storage: window.localStorage,
  api: new ServerApi(''), // same origin; the server proxies or serves this page
  recorderFactory: () => new MediaRecorderAdapter(),
});

void app.init();

// Retry delivery whenever connectivity returns and on a slow heartbeat.
window.addEventListener('online', () => void app.backgroundSync());
setInterval(() => void app.backgroundSync(), 30_000);
