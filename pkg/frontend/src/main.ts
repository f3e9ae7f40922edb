import { SessionClient } from './connection';
import { Viewer } from './viewer';

function boot(): void {
  const params = new URLSearchParams(window.location.search);
  const token = params.get('token') ?? '';
  const name = params.get('name') ?? `viewer-${Math.floor(Math.random() * 1000)}`;
  const url = `${window.location.protocol === 'https:' ? 'wss' : 'ws'}://${window.location.host}/ws?token=${encodeURIComponent(token)}`;

  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app container');

  let viewer: Viewer | null = null;
  const client = new SessionClient({
    url,
    name,
    onToast: (text) => viewer?.showToast(text),
    onEvent: (ev) => {
      if (ev.t === 'asset_catalog') viewer?.setCatalog(ev.entries);
      viewer?.onEvent(ev);
    },
    onMeshData: (meshId) => viewer?.onMeshData(meshId),
  });
  viewer = new Viewer(client, root);
  client.connect().catch((err) => viewer?.showToast(`connection failed: ${err}`));
}

boot();
