/** Toolbar state machine. Exactly one locomotion/manipulation mode is
 * active at a time; toggling the active mode returns to plain navigation.
 * Panels (import / images / textures) are modal overlays on top of the
 * mode and never emit ops by themselves. */

export type ViewerMode = 'navigate' | 'push-pull' | 'resize' | 'teleport';
export type PanelKind = 'import' | 'images' | 'textures';

export class ModeState {
  mode: ViewerMode = 'navigate';
  panel: PanelKind | null = null;

  toggleMode(next: Exclude<ViewerMode, 'navigate'>): ViewerMode {
    this.mode = this.mode === next ? 'navigate' : next;
    return this.mode;
  }

  togglePanel(panel: PanelKind): PanelKind | null {
    this.panel = this.panel === panel ? null : panel;
    return this.panel;
  }

  /** The red pointing ray is a push-pull affordance. */
  get rayVisible(): boolean {
    return this.mode === 'push-pull';
  }

  /** The floor light-signal marker belongs to teleport mode. */
  get floorMarkerVisible(): boolean {
    return this.mode === 'teleport';
  }
}
