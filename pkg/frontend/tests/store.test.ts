import { describe, expect, it } from "vitest";
import { ViewModel } from "../src/store.js";
import type { Frame } from "../src/schema.js";

function frame(tick: number, overrides: Partial<Frame> = {}): Frame {
  return {
    type: "frame",
    tick,
    entities: [
      { k: "ally", id: 0, x: tick, y: 0, phi: 0, f: 1 },
      { k: "enemy", id: 0, x: 100 - tick, y: 0, phi: Math.PI, f: 1 },
    ],
    term: "running",
    rt: 0.1,
    rn: 0,
    rh: 0,
    tracks: [],
    assign: {},
    ...overrides,
  };
}

describe("ViewModel", () => {
  it("applies frames in tick order", () => {
    const vm = new ViewModel();
    expect(vm.apply(frame(0))).toBe(true);
    expect(vm.apply(frame(1))).toBe(true);
    expect(vm.tick).toBe(1);
  });

  it("discards out-of-order and duplicate frames", () => {
    const vm = new ViewModel();
    vm.apply(frame(5));
    expect(vm.apply(frame(3))).toBe(false);
    expect(vm.apply(frame(5))).toBe(false);
    expect(vm.tick).toBe(5);
    expect(vm.discarded).toBe(2);
    // Rewards from dropped frames must not accumulate.
    expect(vm.totalRt).toBeCloseTo(0.1);
  });

  it("accumulates reward channels across applied frames", () => {
    const vm = new ViewModel();
    vm.apply(frame(0, { rt: 0.2, rn: 1.0, rh: -1.0 }));
    vm.apply(frame(1, { rt: 0.3, rn: 0.0, rh: 0.0 }));
    expect(vm.totalRt).toBeCloseTo(0.5);
    expect(vm.totalRn).toBeCloseTo(1.0);
    expect(vm.totalRh).toBeCloseTo(-1.0);
  });

  it("builds bounded trails for living movers only", () => {
    const vm = new ViewModel();
    for (let t = 0; t < 60; t++) {
      vm.apply(frame(t));
    }
    const trail = vm.trails.get("ally:0")!;
    expect(trail.length).toBeLessThanOrEqual(40);
    expect(trail[trail.length - 1].x).toBe(59);
    // Dead entity stops extending its trail.
    vm.apply(
      frame(60, {
        entities: [{ k: "ally", id: 0, x: 60, y: 0, phi: 0, f: 0 }],
      })
    );
    expect(vm.trails.get("ally:0")![trail.length - 1].tick).toBe(59);
  });

  it("tracks takeover membership", () => {
    const vm = new ViewModel();
    vm.markTakeover(2);
    vm.markTakeover(4);
    vm.markRelease(2);
    expect([...vm.takenOver]).toEqual([4]);
  });

  it("reports staleness only while running", () => {
    const vm = new ViewModel();
    vm.apply(frame(0), 1000);
    expect(vm.isStale(1100)).toBe(false);
    expect(vm.isStale(2000)).toBe(true);
    vm.apply(frame(1, { term: "success" }), 2100);
    expect(vm.isStale(9999)).toBe(false);
  });

  it("reset clears all derived state", () => {
    const vm = new ViewModel();
    vm.apply(frame(0));
    vm.markTakeover(0);
    vm.reset();
    expect(vm.frame).toBeNull();
    expect(vm.trails.size).toBe(0);
    expect(vm.takenOver.size).toBe(0);
    expect(vm.totalRt).toBe(0);
  });
});
