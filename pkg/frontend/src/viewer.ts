/** three.js render layer: draws the replicated scene, runs the desktop
 * controls (orbit camera, grab-drag, mode gestures), renders the toolbar
 * and panels, and applies remote avatar poses. WebXR is offered only when
 * the browser exposes it. */

import * as THREE from 'three';
import { OrbitControls } from 'three/addons/controls/OrbitControls.js';

import type { SessionClient } from './connection';
import { InteractionController, FLOOR_Y } from './controller';
import { sliceStep } from './gestures';
import type { Material as WireMaterial, ObjectState, ServerEvent, Transform } from './protocol';
import { parseBinaryStl, slicePart } from './stl';

function toQuaternion(t: Transform): THREE.Quaternion {
  const [w, x, y, z] = t.rot;
  return new THREE.Quaternion(x, y, z, w);
}

function applyTransform(obj: THREE.Object3D, t: Transform): void {
  obj.position.set(t.pos[0], t.pos[1], t.pos[2]);
  obj.quaternion.copy(toQuaternion(t));
  obj.scale.setScalar(t.scale);
}

function materialFor(m: WireMaterial): THREE.Material {
  const color = new THREE.Color(m.color[0], m.color[1], m.color[2]);
  if (m.preset === 'glass') {
    return new THREE.MeshPhysicalMaterial({
      color, transparent: true, opacity: m.opacity, roughness: 0.05,
      metalness: 0.0, transmission: 0.6,
    });
  }
  if (m.preset === 'brick') {
    return new THREE.MeshStandardMaterial({
      color: color.multiply(new THREE.Color(0.8, 0.35, 0.25)),
      transparent: m.opacity < 1, opacity: m.opacity, roughness: 0.9,
    });
  }
  return new THREE.MeshStandardMaterial({
    color, transparent: m.opacity < 1, opacity: m.opacity, roughness: 0.6, metalness: 0.1,
  });
}

export class Viewer {
  readonly controller: InteractionController;
  private scene = new THREE.Scene();
  private camera: THREE.PerspectiveCamera;
  private renderer: THREE.WebGLRenderer;
  private controls: OrbitControls;
  private raycaster = new THREE.Raycaster();
  private objectNodes = new Map<number, THREE.Mesh>();
  private avatarNodes = new Map<number, THREE.Group>();
  private pendingGeometry = new Map<number, Set<number>>(); // mesh id -> object ids
  private floorMarker: THREE.Mesh;
  private dragPlane = new THREE.Plane();
  private dragOffset = new THREE.Vector3();
  private dragging = false;
  private hoverObject: number | null = null;
  private toast: HTMLDivElement;
  private stackImg: HTMLImageElement;
  private stackSlider: HTMLInputElement;
  private stackLabel: HTMLSpanElement;
  private panels = new Map<string, HTMLDivElement>();

  constructor(private client: SessionClient, private root: HTMLElement) {
    this.controller = new InteractionController(client);
    this.camera = new THREE.PerspectiveCamera(60, 1, 0.01, 500);
    this.camera.position.set(2.5, 1.8, 3.0);
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setPixelRatio(window.devicePixelRatio);
    root.appendChild(this.renderer.domElement);
    this.controls = new OrbitControls(this.camera, this.renderer.domElement);
    this.controls.target.set(0, 1, 0);

    this.scene.background = new THREE.Color(0x10141c);
    this.scene.add(new THREE.HemisphereLight(0xffffff, 0x334455, 1.2));
    const sun = new THREE.DirectionalLight(0xffffff, 1.5);
    sun.position.set(4, 8, 2);
    this.scene.add(sun);
    const grid = new THREE.GridHelper(20, 40, 0x335577, 0x1d2a3a);
    grid.position.y = FLOOR_Y;
    this.scene.add(grid);

    this.floorMarker = new THREE.Mesh(
      new THREE.RingGeometry(0.25, 0.35, 32),
      new THREE.MeshBasicMaterial({ color: 0x66ffcc, side: THREE.DoubleSide }),
    );
    this.floorMarker.rotation.x = -Math.PI / 2;
    this.floorMarker.visible = false;
    this.scene.add(this.floorMarker);

    this.toast = document.createElement('div');
    this.toast.className = 'toast';
    root.appendChild(this.toast);
    this.stackImg = document.createElement('img');
    this.stackSlider = document.createElement('input');
    this.stackLabel = document.createElement('span');

    this.buildToolbar();
    this.buildPanels();
    this.bindPointer();
    this.resize();
    window.addEventListener('resize', () => this.resize());
    this.renderer.setAnimationLoop(() => this.frame());
    this.setupXr();
  }

  showToast(text: string): void {
    this.toast.textContent = text;
    this.toast.classList.add('visible');
    setTimeout(() => this.toast.classList.remove('visible'), 2500);
  }

  // ------------------------------------------------------------- events

  onEvent(ev: ServerEvent): void {
    switch (ev.t) {
      case 'scene_snapshot':
        for (const node of this.objectNodes.values()) this.scene.remove(node);
        this.objectNodes.clear();
        for (const obj of ev.objects) this.addObject(obj);
        for (const avatar of this.avatarNodes.values()) this.scene.remove(avatar);
        this.avatarNodes.clear();
        this.refreshStackPanel();
        break;
      case 'object_added':
        this.addObject(ev.object);
        break;
      case 'material_changed': {
        const node = this.objectNodes.get(ev.object);
        if (node) node.material = materialFor(ev.material);
        break;
      }
      case 'avatar_moved':
        this.updateAvatar(ev.client, ev.gone, ev.head, ev.left, ev.right);
        break;
      case 'slice_changed':
        this.refreshStackPanel(ev.png_b64);
        break;
      case 'asset_catalog':
        this.refreshImportPanel();
        break;
      case 'quantify_result':
        this.showToast(`object ${ev.object}: ${JSON.stringify(ev.report)}`);
        break;
      default:
        break;
    }
  }

  onMeshData(meshId: number): void {
    const waiting = this.pendingGeometry.get(meshId);
    if (!waiting) return;
    this.pendingGeometry.delete(meshId);
    for (const objectId of waiting) {
      const state = this.client.replica.objects.get(objectId);
      if (state) this.buildGeometry(state);
    }
  }

  private addObject(state: ObjectState): void {
    const stl = this.client.meshes.get(state.mesh);
    if (!stl) {
      let waiting = this.pendingGeometry.get(state.mesh);
      if (!waiting) {
        waiting = new Set();
        this.pendingGeometry.set(state.mesh, waiting);
      }
      waiting.add(state.id);
      this.client.ensureMesh(state.mesh);
      return;
    }
    this.buildGeometry(state);
  }

  private buildGeometry(state: ObjectState): void {
    const stl = this.client.meshes.get(state.mesh);
    if (!stl) return;
    let mesh = parseBinaryStl(stl);
    if (state.part) mesh = slicePart(mesh, state.part.start, state.part.end);
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute('position', new THREE.BufferAttribute(mesh.positions, 3));
    geometry.computeVertexNormals();
    const node = new THREE.Mesh(geometry, materialFor(state.material));
    node.userData.objectId = state.id;
    applyTransform(node, state.transform);
    const old = this.objectNodes.get(state.id);
    if (old) this.scene.remove(old);
    this.objectNodes.set(state.id, node);
    this.scene.add(node);
  }

  private updateAvatar(clientId: number, gone: boolean,
                       head: Transform, left: Transform, right: Transform): void {
    if (clientId === this.client.clientId) return;
    let group = this.avatarNodes.get(clientId);
    if (gone) {
      if (group) this.scene.remove(group);
      this.avatarNodes.delete(clientId);
      return;
    }
    if (!group) {
      group = new THREE.Group();
      const headNode = new THREE.Mesh(
        new THREE.BoxGeometry(0.18, 0.22, 0.14),
        new THREE.MeshStandardMaterial({ color: 0x77aaff }),
      );
      headNode.name = 'head';
      const handGeom = new THREE.SphereGeometry(0.05, 12, 8);
      const handMat = new THREE.MeshStandardMaterial({ color: 0xffcc66 });
      const leftNode = new THREE.Mesh(handGeom, handMat);
      leftNode.name = 'left';
      const rightNode = new THREE.Mesh(handGeom, handMat);
      rightNode.name = 'right';
      group.add(headNode, leftNode, rightNode);
      this.avatarNodes.set(clientId, group);
      this.scene.add(group);
    }
    applyTransform(group.getObjectByName('head') as THREE.Object3D, head);
    applyTransform(group.getObjectByName('left') as THREE.Object3D, left);
    applyTransform(group.getObjectByName('right') as THREE.Object3D, right);
  }

  // ------------------------------------------------------------- frame

  private frame(): void {
    for (const [id, node] of this.objectNodes) {
      const t = this.client.displayTransform(id);
      if (t) applyTransform(node, t);
    }
    this.controls.update();
    this.renderer.render(this.scene, this.camera);
  }

  private resize(): void {
    const w = this.root.clientWidth || window.innerWidth;
    const h = this.root.clientHeight || window.innerHeight;
    this.camera.aspect = w / h;
    this.camera.updateProjectionMatrix();
    this.renderer.setSize(w, h);
  }

  private setupXr(): void {
    const nav = navigator as Navigator & { xr?: unknown };
    if (!nav.xr) return;
    this.renderer.xr.enabled = true;
    import('three/addons/webxr/VRButton.js')
      .then(({ VRButton }) => this.root.appendChild(VRButton.createButton(this.renderer)))
      .catch(() => undefined);
  }

  // ------------------------------------------------------------- pointer

  private pickRay(evt: PointerEvent | WheelEvent): THREE.Raycaster {
    const rect = this.renderer.domElement.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((evt.clientX - rect.left) / rect.width) * 2 - 1,
      -((evt.clientY - rect.top) / rect.height) * 2 + 1,
    );
    this.raycaster.setFromCamera(ndc, this.camera);
    return this.raycaster;
  }

  private pickObject(evt: PointerEvent | WheelEvent): number | null {
    const ray = this.pickRay(evt);
    const hits = ray.intersectObjects([...this.objectNodes.values()], false);
    return hits.length ? (hits[0].object.userData.objectId as number) : null;
  }

  private bindPointer(): void {
    const canvas = this.renderer.domElement;
    canvas.addEventListener('pointerdown', (evt) => {
      if (evt.button !== 0) return;
      const mode = this.controller.modes.mode;
      if (mode === 'teleport') {
        const ray = this.pickRay(evt);
        const o = ray.ray.origin;
        const d = ray.ray.direction;
        const target = this.controller.clickTeleport([o.x, o.y, o.z], [d.x, d.y, d.z]);
        if (target) {
          const jump = new THREE.Vector3(target[0], 0, target[2]).sub(
            new THREE.Vector3(this.controls.target.x, 0, this.controls.target.z));
          this.camera.position.add(jump);
          this.controls.target.add(jump);
        }
        return;
      }
      if (mode !== 'navigate') return;
      const picked = this.pickObject(evt);
      if (picked === null) return;
      const node = this.objectNodes.get(picked);
      if (!node) return;
      this.controls.enabled = false;
      this.dragging = true;
      const normal = this.camera.getWorldDirection(new THREE.Vector3()).negate();
      this.dragPlane.setFromNormalAndCoplanarPoint(normal, node.position);
      const ray = this.pickRay(evt);
      const hit = new THREE.Vector3();
      ray.ray.intersectPlane(this.dragPlane, hit);
      this.dragOffset.copy(node.position).sub(hit);
      this.controller.grabStart(picked, this.handPose(hit));
    });

    canvas.addEventListener('pointermove', (evt) => {
      const ray = this.pickRay(evt);
      if (this.dragging && this.controller.grabbedObject !== null) {
        const hit = new THREE.Vector3();
        if (ray.ray.intersectPlane(this.dragPlane, hit)) {
          const state = this.client.replica.objects.get(this.controller.grabbedObject);
          if (state) {
            const predictedPos = hit.clone().add(this.dragOffset);
            const predicted: Transform = {
              pos: [predictedPos.x, predictedPos.y, predictedPos.z],
              rot: state.transform.rot,
              scale: state.transform.scale,
            };
            this.controller.dragTo(this.handPose(hit), predicted);
          }
        }
        return;
      }
      if (this.controller.modes.mode === 'teleport') {
        const o = ray.ray.origin;
        const d = ray.ray.direction;
        if (d.y < -1e-6) {
          const t = (FLOOR_Y - o.y) / d.y;
          this.floorMarker.position.set(o.x + t * d.x, FLOOR_Y + 0.01, o.z + t * d.z);
          this.floorMarker.visible = this.controller.modes.floorMarkerVisible;
        } else {
          this.floorMarker.visible = false;
        }
      }
      this.hoverObject = this.pickObject(evt);
    });

    canvas.addEventListener('pointerup', () => {
      if (this.dragging) {
        this.dragging = false;
        this.controls.enabled = true;
        this.controller.grabEnd();
      }
    });

    canvas.addEventListener('wheel', (evt) => {
      const mode = this.controller.modes.mode;
      const target = this.hoverObject ?? this.pickObject(evt);
      if (target === null) return;
      if (mode === 'resize') {
        evt.preventDefault();
        this.controller.wheelResize(target, evt.deltaY < 0 ? 1 : -1);
      } else if (mode === 'push-pull') {
        evt.preventDefault();
        const ray = this.pickRay(evt);
        const o = ray.ray.origin;
        const d = ray.ray.direction;
        this.controller.stickPushPull(
          target, [o.x, o.y, o.z], [d.x, d.y, d.z], evt.deltaY < 0 ? 1 : -1, 0.25);
      }
    }, { passive: false });
  }

  private handPose(point: THREE.Vector3): Transform {
    return { pos: [point.x, point.y, point.z], rot: [1, 0, 0, 0], scale: 1 };
  }

  // ------------------------------------------------------------- chrome

  private buildToolbar(): void {
    const bar = document.createElement('div');
    bar.className = 'toolbar';
    const buttons: Array<[string, () => void]> = [
      ['Push and Pull', () => this.setMode('push-pull')],
      ['Resize Mesh', () => this.setMode('resize')],
      ['Teleport', () => this.setMode('teleport')],
      ['Import Mesh', () => this.togglePanel('import')],
      ['Images', () => this.togglePanel('images')],
      ['Textures', () => this.togglePanel('textures')],
    ];
    for (const [label, onClick] of buttons) {
      const btn = document.createElement('button');
      btn.textContent = label;
      btn.dataset.label = label;
      btn.addEventListener('click', () => {
        onClick();
        this.refreshToolbar(bar);
      });
      bar.appendChild(btn);
    }
    this.root.appendChild(bar);
  }

  private setMode(mode: 'push-pull' | 'resize' | 'teleport'): void {
    this.controller.modes.toggleMode(mode);
    this.floorMarker.visible = false;
  }

  private togglePanel(panel: 'import' | 'images' | 'textures'): void {
    const active = this.controller.modes.togglePanel(panel);
    for (const [name, el] of this.panels) {
      el.style.display = name === active ? 'block' : 'none';
    }
    if (active === 'import') this.client.listAssets();
  }

  private refreshToolbar(bar: HTMLDivElement): void {
    const activeLabel = {
      'push-pull': 'Push and Pull', resize: 'Resize Mesh', teleport: 'Teleport', navigate: '',
    }[this.controller.modes.mode];
    bar.querySelectorAll('button').forEach((btn) => {
      btn.classList.toggle('active', btn.dataset.label === activeLabel);
    });
  }

  private buildPanels(): void {
    for (const name of ['import', 'images', 'textures'] as const) {
      const panel = document.createElement('div');
      panel.className = `panel panel-${name}`;
      panel.style.display = 'none';
      this.panels.set(name, panel);
      this.root.appendChild(panel);
    }
    const images = this.panels.get('images')!;
    this.stackImg.className = 'slice';
    this.stackSlider.type = 'range';
    this.stackSlider.min = '0';
    this.stackSlider.value = '0';
    this.stackSlider.addEventListener('input', () => {
      this.client.selectSlice(Number(this.stackSlider.value));
    });
    this.stackSlider.addEventListener('keydown', (evt) => {
      const stack = this.client.replica.stack;
      if (!stack) return;
      if (evt.key === 'ArrowRight' || evt.key === 'ArrowLeft') {
        evt.preventDefault();
        const next = sliceStep(stack.index, evt.key === 'ArrowRight' ? 1 : -1, stack.count);
        if (next !== stack.index) this.client.selectSlice(next);
      }
    });
    images.appendChild(this.stackImg);
    images.appendChild(this.stackSlider);
    images.appendChild(this.stackLabel);

    const textures = this.panels.get('textures')!;
    for (const preset of ['default', 'glass', 'brick'] as const) {
      const btn = document.createElement('button');
      btn.textContent = preset;
      btn.addEventListener('click', () => {
        if (this.hoverObject !== null) this.client.setMaterial(this.hoverObject, preset, null);
        else this.showToast('hover an object, then pick a texture');
      });
      textures.appendChild(btn);
    }
    const opacity = document.createElement('input');
    opacity.type = 'range';
    opacity.min = '0';
    opacity.max = '100';
    opacity.value = '100';
    opacity.addEventListener('input', () => {
      if (this.hoverObject !== null) {
        this.client.setOpacity(this.hoverObject, Number(opacity.value) / 100);
      }
    });
    textures.appendChild(opacity);
  }

  private refreshImportPanel(): void {
    const panel = this.panels.get('import')!;
    panel.textContent = '';
    const title = document.createElement('h3');
    title.textContent = 'Available files';
    panel.appendChild(title);
    for (const entry of this.lastCatalog()) {
      const row = document.createElement('button');
      row.textContent = `${entry.name} (${entry.kind})`;
      row.addEventListener('click', () => {
        if (entry.kind === 'image-stack') this.client.importStack(entry.name);
        else this.client.importAsset(entry.name);
      });
      panel.appendChild(row);
    }
  }

  private catalog: { name: string; kind: string }[] = [];

  private lastCatalog(): { name: string; kind: 'mesh-obj' | 'mesh-stl' | 'image-stack' }[] {
    return this.catalog as { name: string; kind: 'mesh-obj' | 'mesh-stl' | 'image-stack' }[];
  }

  setCatalog(entries: { name: string; kind: string }[]): void {
    this.catalog = entries;
    this.refreshImportPanel();
  }

  private refreshStackPanel(pngB64?: string): void {
    const stack = this.client.replica.stack;
    if (!stack) return;
    this.stackSlider.max = String(stack.count - 1);
    this.stackSlider.value = String(stack.index);
    this.stackLabel.textContent = `${stack.name}  ${stack.index + 1}/${stack.count}`;
    if (pngB64) this.stackImg.src = `data:image/png;base64,${pngB64}`;
  }
}
