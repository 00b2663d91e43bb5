/** Wire types mirroring the consultation service's JSON payloads. */

export type NetworkKind = "belief" | "decision";
export type NodeKind = "chance" | "decision" | "value";

export interface KbSummary {
  name: string;
  kind: NetworkKind;
  node_count: number;
}

export interface DisplayMeta {
  x: number;
  y: number;
  color: [number, number, number];
  shade: number;
}

export interface NodeMeta {
  name: string;
  question: string;
  description: string;
  display: DisplayMeta;
}

export interface KbNode {
  id: string;
  kind: NodeKind;
  states?: string[];
  alternatives?: string[];
  parents: string[];
  meta: NodeMeta;
  cpt?: number[][];
  utilities?: number[];
}

export interface KbNetwork {
  name: string;
  kind: NetworkKind;
  nodes: KbNode[];
}

/** node id -> state label -> probability */
export type Beliefs = Record<string, Record<string, number>>;

export interface SessionView {
  kb: string;
  findings: Record<string, string>;
  beliefs: Beliefs;
  history_len: number;
}

export interface EvaluatedDecision {
  configuration: Record<string, string>;
  expected_utility: number | null;
  normalized_score: number | null;
  feasible: boolean;
}

export interface Recommendation {
  best: EvaluatedDecision;
  ranking: EvaluatedDecision[];
}

export type EventKind = "created" | "asserted" | "retracted" | "rejected";

export interface SessionEvent {
  seq: number;
  kind: EventKind;
  node: string | null;
  state: string | null;
  timestamp: number;
}

export interface WhatIfResult {
  beliefs: Beliefs;
  recommendation?: Recommendation;
}

/** Clickable values of a node: chance states or decision alternatives. */
export function nodeValues(node: KbNode): string[] {
  return node.states ?? node.alternatives ?? [];
}
