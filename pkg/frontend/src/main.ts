import { ApiClient } from './api.js';
import { SeedScreen } from './seed.js';
import { SessionScreen } from './session.js';

// Hash routes: #/ -> seed entry, #/session/{id} -> live session.

const api = new ApiClient('');
let active: SessionScreen | null = null;

function mount(): void {
  const root = document.getElementById('app');
  if (!root) return;
  if (active) {
    active.stop();
    active = null;
  }
  root.innerHTML = '';
  const match = location.hash.match(/^#\/session\/([A-Za-z0-9_-]+)$/);
  if (match) {
    active = new SessionScreen(root, api, match[1]);
    active.start();
  } else {
    new SeedScreen(root, api, (id) => {
      location.hash = `#/session/${id}`;
    });
  }
}

window.addEventListener('hashchange', mount);
mount();
