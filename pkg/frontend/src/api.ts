/** Typed client for the propagation service REST endpoints. */

import type { QueryBody } from "./chips.js";

export type AnnotationStatus =
  | "hidden_common"
  | "unmatched"
  | "matched_in_order"
  | "matched_out_of_order";

export interface AnnotationWire {
  keyword: string;
  status: AnnotationStatus;
}

export interface CheckWire {
  name: string;
  value: number | null;
  threshold: number;
  passed: boolean | null;
}

export interface ValidationWire {
  passed: boolean;
  reason: string | null;
  checks: CheckWire[];
}

export interface GroupWire {
  group_hash: string;
  rank: number;
  score: number;
  ordered_member_ids: string[];
  per_position_gamma: number[];
  validation: ValidationWire;
  annotations: AnnotationWire[][];
}

export interface SearchResponse {
  reference_page_id: string;
  query: QueryBody;
  count: number;
  groups: GroupWire[];
}

export interface SearchBody {
  page_id: string;
  query?: QueryBody;
  auto_exclude?: boolean;
}

export interface PropagateBody {
  page_id: string;
  group_hash: string;
}

export interface PropagateResponse {
  new_page_id: string;
  source_page_id: string;
  ordered_member_ids: string[];
  decided_at: string;
}

/** Error envelope returned by every non-2xx service response. */
export class ApiError extends Error {
  readonly errorCode: string;
  readonly status: number;

  constructor(errorCode: string, message: string, status: number) {
    super(message);
    this.name = "ApiError";
    this.errorCode = errorCode;
    this.status = status;
  }
}

/** The slice of the service the UI talks to. */
export interface Backend {
  referenceQuery(pageId: string): Promise<QueryBody>;
  search(body: SearchBody): Promise<SearchResponse>;
  propagate(body: PropagateBody): Promise<PropagateResponse>;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Backend over HTTP; the base URL is the only configuration. */
export class HttpBackend implements Backend {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl: FetchLike = (input, init) => fetch(input, init)) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl;
  }

  referenceQuery(pageId: string): Promise<QueryBody> {
    return this.request<QueryBody>("GET", `/pages/${encodeURIComponent(pageId)}/reference-query`);
  }

  search(body: SearchBody): Promise<SearchResponse> {
    return this.request<SearchResponse>("POST", "/search", body);
  }

  propagate(body: PropagateBody): Promise<PropagateResponse> {
    return this.request<PropagateResponse>("POST", "/propagate", body);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { accept: "application/json" } };
    if (body !== undefined) {
      init.headers = { ...init.headers, "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      throw await toApiError(response);
    }
    return (await response.json()) as T;
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  let code = "unknown_error";
  let message = `request failed with status ${response.status}`;
  try {
    const payload = (await response.json()) as { error_code?: string; message?: string };
    if (typeof payload.error_code === "string") code = payload.error_code;
    if (typeof payload.message === "string") message = payload.message;
  } catch {
    // non-JSON body keeps the fallback message
  }
  return new ApiError(code, message, response.status);
}
