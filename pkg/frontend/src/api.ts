import type {
  ApiResult,
  CheckResponse,
  Decision,
  StoredBug,
  TriageClient,
  TriageForm,
} from "./types.js";

type FetchLike = typeof fetch;

async function post<T>(
  fetchFn: FetchLike,
  url: string,
  body: unknown,
): Promise<ApiResult<T>> {
  let response: Response;
  try {
    response = await fetchFn(url, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  } catch (err) {
    return {
      ok: false,
      error: { status: 0, detail: err instanceof Error ? err.message : String(err) },
    };
  }
  let payload: unknown = null;
  try {
    payload = await response.json();
  } catch {
    payload = null;
  }
  if (!response.ok) {
    const record = (payload ?? {}) as { detail?: string; fields?: string[] };
    return {
      ok: false,
      error: {
        status: response.status,
        detail: record.detail ?? `HTTP ${response.status}`,
        fields: record.fields,
      },
    };
  }
  return { ok: true, value: payload as T };
}

/** App-server client; baseUrl is "" when the UI is served from /ui. */
export function httpClient(
  baseUrl: string,
  fetchFn: FetchLike = fetch,
): TriageClient {
  return {
    check(form: TriageForm) {
      return post<CheckResponse>(fetchFn, `${baseUrl}/api/v1/check`, form);
    },
    decide(decision: Decision) {
      return post<StoredBug>(fetchFn, `${baseUrl}/api/v1/decision`, decision);
    },
  };
}
