/**
 * Typed client for the analysis service API.
 *
 * Every request goes through one logged code path, so tests (and the
 * no-reprocess invariant) can inspect exactly what was sent. The fetch
 * implementation is injectable for testing.
 */

export type JobState = "uploaded" | "queued" | "processing" | "complete" | "failed";
export type Variant = "summarized" | "segmented" | "tagged";

export interface UploadResponse {
  key: string;
  videos: number;
}

export interface JobStatus {
  state: JobState;
  progress: number;
  error?: string;
}

export interface KeyframeEntry {
  index: number;
  abnormal: boolean;
  urls: Record<Variant, string>;
}

export interface VideoManifest {
  video_id: number;
  source_name: string;
  fps: number;
  keyframe_count: number;
  urls: Record<Variant, string>;
  annotations_url: string;
  keyframes: KeyframeEntry[];
}

export interface ResultsManifest {
  key: string;
  videos: VideoManifest[];
  download_url: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface RequestLogEntry {
  method: string;
  url: string;
}

export class ApiClient {
  /** Chronological log of every request issued through this client. */
  readonly log: RequestLogEntry[] = [];
  private readonly fetchImpl: FetchLike;

  constructor(fetchImpl?: FetchLike) {
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(method: string, url: string, body?: BodyInit): Promise<T> {
    this.log.push({ method, url });
    const response = await this.fetchImpl(url, { method, body });
    if (!response.ok) {
      let code = `http_${response.status}`;
      let detail = response.statusText;
      try {
        const parsed = await response.json();
        if (parsed && typeof parsed.error === "string") {
          code = parsed.error;
          detail = parsed.detail ?? detail;
        }
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, code, detail);
    }
    return (await response.json()) as T;
  }

  /** How many processing requests this client has issued (invariant hook). */
  processingRequestCount(): number {
    return this.log.filter((e) => e.method === "POST" && e.url.startsWith("/api/process/")).length;
  }

  async upload(files: { name: string; data: Blob }[]): Promise<UploadResponse> {
    const form = new FormData();
    for (const file of files) {
      form.append("videos", file.data, file.name);
    }
    return this.request<UploadResponse>("POST", "/api/upload", form);
  }

  async process(key: string): Promise<{ state: JobState }> {
    return this.request("POST", `/api/process/${key}`);
  }

  async status(key: string): Promise<JobStatus> {
    return this.request("GET", `/api/status/${key}`);
  }

  async results(key: string): Promise<ResultsManifest> {
    return this.request("GET", `/api/results/${key}`);
  }

  async keyframes(key: string, videoId: number, n: number, seed: number): Promise<KeyframeEntry[]> {
    return this.request("GET", `/api/keyframes/${key}/${videoId}?n=${n}&seed=${seed}`);
  }

  downloadUrl(key: string): string {
    return `/api/download/${key}`;
  }
}
