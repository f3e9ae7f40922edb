import { describe, expect, it } from 'vitest';

import { Prediction } from '../src/prediction';
import { IDENTITY, type Transform } from '../src/protocol';

const moved: Transform = { pos: [0, 0, 5], rot: [1, 0, 0, 0], scale: 1 };

describe('Prediction', () => {
  it('shows the override until the server echoes', () => {
    const p = new Prediction();
    p.predict(3, 1, moved);
    expect(p.display(1, IDENTITY)).toEqual(moved);
    p.onTransformChanged(1);
    expect(p.display(1, IDENTITY)).toEqual(IDENTITY);
    expect(p.hasOverride(1)).toBe(false);
  });

  it('rejection rolls back to the confirmed transform', () => {
    const p = new Prediction();
    p.predict(7, 2, moved);
    const rolledBack = p.onRejected(7);
    expect(rolledBack).toBe(2);
    expect(p.display(2, IDENTITY)).toEqual(IDENTITY);
  });

  it('rejection of an untracked seq is a no-op', () => {
    const p = new Prediction();
    expect(p.onRejected(99)).toBeNull();
  });

  it('tracked ops without overrides can still be rejected', () => {
    const p = new Prediction();
    p.track(4, 5);
    expect(p.onRejected(4)).toBe(5);
  });

  it('reconciles within one event even with stacked predictions', () => {
    const p = new Prediction();
    p.predict(1, 1, moved);
    p.predict(2, 1, { ...moved, pos: [0, 0, 9] });
    p.onTransformChanged(1);
    expect(p.hasOverride(1)).toBe(false);
  });
});
