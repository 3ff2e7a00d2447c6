import type { SessionSnapshot } from "../src/types.js";

/** Hand-built session snapshot: 2-level headings on both sides, one agent
 * and one manual insight, one cue of each mechanism, one differing block. */
export function fixtureSnapshot(): SessionSnapshot {
  return {
    id: "fixture00001",
    revision: 4,
    document: {},
    state: {
      rowNodes: [
        { path: ["A"], label: "A", depth: 0, leaf: false },
        { path: ["A", "a1"], label: "a1", depth: 1, leaf: true },
        { path: ["A", "a2"], label: "a2", depth: 1, leaf: true },
        { path: ["B"], label: "B", depth: 0, leaf: false },
        { path: ["B", "b1"], label: "b1", depth: 1, leaf: true },
        { path: ["B", "b2"], label: "b2", depth: 1, leaf: true },
      ],
      colNodes: [
        { path: ["X"], label: "X", depth: 0, leaf: false },
        { path: ["X", "x1"], label: "x1", depth: 1, leaf: true },
        { path: ["X", "x2"], label: "x2", depth: 1, leaf: true },
        { path: ["Y"], label: "Y", depth: 0, leaf: false },
        { path: ["Y", "y1"], label: "y1", depth: 1, leaf: true },
        { path: ["Y", "y2"], label: "y2", depth: 1, leaf: true },
      ],
      values: [
        [1, 2, 3, 4],
        [2, 4, 6, 8],
        [60, 10, 10, 10],
        [5, 6, 5, null],
      ],
      vizMask: [
        ["i0", "i0", null, null],
        ["i0", "i0", null, null],
        [null, null, "i1", "i1"],
        [null, null, "i1", "i1"],
      ],
    },
    insights: [
      {
        id: "i0",
        kind: "correlation",
        score: 1.0,
        params: { fraction: 1.0 },
        chart: "multi-line",
        provenance: "agent",
        rowEntry: ["A"],
        colEntry: ["X"],
      },
      {
        id: "i1",
        kind: "dominance",
        score: 0.667,
        params: { index: 0 },
        chart: "pie",
        provenance: "manual",
        rowEntry: ["B"],
        colEntry: ["Y"],
      },
    ],
    metrics: {
      ar: 0.5,
      ir: 0.1666666,
      er: 0.6931472,
      coveredCells: 8,
      totalCells: 16,
      discoveredKinds: 2,
      totalKinds: 12,
    },
    relations: [
      {
        anchorInsight: "i0",
        mechanism: "name-based",
        sharedSide: "row",
        blocks: [
          { rowEntry: ["A"], colEntry: ["X"] },
          { rowEntry: ["A"], colEntry: ["Y"] },
        ],
        pattern: null,
      },
      {
        anchorInsight: "i0",
        mechanism: "topology-based",
        sharedSide: "col",
        blocks: [
          { rowEntry: ["A"], colEntry: ["X"] },
          { rowEntry: ["A", "a1"], colEntry: ["X"] },
          { rowEntry: ["A", "a2"], colEntry: ["X"] },
          { rowEntry: ["B"], colEntry: ["X"] },
        ],
        pattern: {
          kind: "one_differs",
          score: 0.9,
          params: { sharedKind: "trend", differingBlock: 3 },
          chart: "line",
        },
      },
    ],
  };
}
