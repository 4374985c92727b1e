/**
 * Typed client for the analysis service API.
 *
 * Every request goes through one logged code path, so tests (and the
 * no-reprocess invariant) can inspect exactly what was sent. The fetch
 * implementation is injectable for testing.
 */
export class ApiError extends Error {
    constructor(status, code, detail) {
        super(`${code}: ${detail}`);
        this.status = status;
        this.code = code;
        this.detail = detail;
    }
}
export class ApiClient {
    constructor(fetchImpl) {
        /** Chronological log of every request issued through this client. */
        this.log = [];
        this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
    }
    async request(method, url, body) {
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
            }
            catch {
                // non-JSON error body; keep the status text
            }
            throw new ApiError(response.status, code, detail);
        }
        return (await response.json());
    }
    /** How many processing requests this client has issued (invariant hook). */
    processingRequestCount() {
        return this.log.filter((e) => e.method === "POST" && e.url.startsWith("/api/process/")).length;
    }
    async upload(files) {
        const form = new FormData();
        for (const file of files) {
            form.append("videos", file.data, file.name);
        }
        return this.request("POST", "/api/upload", form);
    }
    async process(key) {
        return this.request("POST", `/api/process/${key}`);
    }
    async status(key) {
        return this.request("GET", `/api/status/${key}`);
    }
    async results(key) {
        return this.request("GET", `/api/results/${key}`);
    }
    async keyframes(key, videoId, n, seed) {
        return this.request("GET", `/api/keyframes/${key}/${videoId}?n=${n}&seed=${seed}`);
    }
    downloadUrl(key) {
        return `/api/download/${key}`;
    }
}
