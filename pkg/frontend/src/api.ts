import type { Choice, HitPayload, Service, SubmitResult } from "./types.js";

export class ServiceError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ServiceError";
  }
}

async function detail(res: Response): Promise<string> {
  try {
    const body = await res.json();
    return body.detail ?? res.statusText;
  } catch {
    return res.statusText;
  }
}

export const httpService: Service = {
  async fetchNextHit(workerId: string): Promise<HitPayload | null> {
    const res = await fetch(
      `/api/hits/next?worker_id=${encodeURIComponent(workerId)}`,
    );
    if (res.status === 204) {
      return null;
    }
    if (!res.ok) {
      throw new ServiceError(res.status, await detail(res));
    }
    return (await res.json()) as HitPayload;
  },

  async submitJudgment(
    hitId: string,
    workerId: string,
    choice: Choice,
  ): Promise<SubmitResult> {
    const res = await fetch("/api/judgments", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ hit_id: hitId, worker_id: workerId, choice }),
    });
    if (res.status === 201) {
      return "recorded";
    }
    if (res.status === 409) {
      return "duplicate"; // already judged: advance without re-posting
    }
    throw new ServiceError(res.status, await detail(res));
  },
};
