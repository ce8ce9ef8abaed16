export interface SentenceView {
  index: number;
  text: string;
  highlight: boolean;
}

export interface Panel {
  sentences: SentenceView[];
}

export interface HitPayload {
  hit_id: string;
  doc_label: string;
  left: Panel;
  right: Panel;
}

export type Choice = "LEFT" | "RIGHT" | "EQUAL";

export type SubmitResult = "recorded" | "duplicate";

export interface Service {
  fetchNextHit(workerId: string): Promise<HitPayload | null>;
  submitJudgment(hitId: string, workerId: string, choice: Choice): Promise<SubmitResult>;
}
