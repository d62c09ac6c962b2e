export interface TriageForm {
  headline: string;
  description: string;
  project: string;
  product: string;
  component: string;
}

export interface Candidate {
  bug_id: string;
  probability: number;
  headline: string;
}

export interface CheckResponse {
  candidates: Candidate[];
  model_version: string;
  request_id: string;
}

export interface StoredBug {
  id: string;
  status: string;
  duplicate_of: string | null;
}

export type Decision =
  | { request_id: string; action: "create_new" }
  | { request_id: string; action: "duplicate_of"; target_id: string };

export interface ApiError {
  /** HTTP status; 0 means the request never reached the server. */
  status: number;
  detail: string;
  fields?: string[];
}

export type ApiResult<T> =
  | { ok: true; value: T }
  | { ok: false; error: ApiError };

export interface TriageClient {
  check(form: TriageForm): Promise<ApiResult<CheckResponse>>;
  decide(decision: Decision): Promise<ApiResult<StoredBug>>;
}
