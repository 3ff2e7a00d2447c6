/** Wire types of the session service. The frontend never derives numbers
 * itself: everything rendered comes verbatim from these payloads. */

export interface HeadingNode {
  path: string[];
  label: string;
  depth: number;
  leaf: boolean;
}

export interface TableStateWire {
  rowNodes: HeadingNode[];
  colNodes: HeadingNode[];
  values: (number | null)[][];
  vizMask: (string | null)[][];
}

export interface InsightWire {
  id: string;
  kind: string;
  score: number;
  params: Record<string, unknown>;
  chart: string;
  provenance: "agent" | "manual";
  rowEntry: string[];
  colEntry: string[];
}

export interface BlockRef {
  rowEntry: string[];
  colEntry: string[];
}

export interface PatternWire {
  kind: "all_same" | "one_differs";
  score: number;
  params: { sharedKind: string; differingBlock?: number };
  chart: string;
}

export interface RelationWire {
  anchorInsight: string;
  mechanism: "name-based" | "topology-based";
  sharedSide: "row" | "col";
  blocks: BlockRef[];
  pattern: PatternWire | null;
}

export interface MetricsWire {
  ar: number;
  ir: number;
  er: number;
  coveredCells: number;
  totalCells: number;
  discoveredKinds: number;
  totalKinds: number;
}

export interface SessionSnapshot {
  id: string;
  revision: number;
  document: unknown;
  state: TableStateWire;
  insights: InsightWire[];
  metrics: MetricsWire;
  relations: RelationWire[];
}
