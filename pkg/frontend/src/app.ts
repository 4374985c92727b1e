/**
 * Application shell: renders the six pages into #app and wires events.
 *
 * All analysis data comes from the API; nothing is computed client-side.
 * After a job completes, the UI never asks the server to process again:
 * the segmentation / object tagging toggles only swap URLs that the
 * results manifest already delivered.
 */

import { ApiClient, ApiError, type KeyframeEntry, type ResultsManifest, type VideoManifest } from "./api.js";
import { isTerminal, nextPollDelay } from "./poll.js";
import { parseRoute, routePath, seedsToQuery, type Route } from "./router.js";
import {
  abnormalCount,
  applyToggle,
  defaultToggles,
  freshSeed,
  keyframeUrl,
  stateLabel,
  uploadAcknowledgment,
  videoUrl,
  type ViewToggles,
} from "./views.js";

const api = new ApiClient();
const app = document.getElementById("app") as HTMLElement;
const viewer = document.getElementById("viewer") as HTMLElement;

// bumped on every navigation so stale async work never touches the DOM
let navToken = 0;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    if (name === "class") node.className = value;
    else node.setAttribute(name, value);
  }
  node.append(...children);
  return node;
}

function navigate(path: string) {
  history.pushState(null, "", path);
  render();
}

function banner(kind: "error" | "ok", text: string): HTMLElement {
  return el("div", { class: `banner ${kind}` }, text);
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.detail} (${err.code})`;
  return err instanceof Error ? err.message : String(err);
}

// ---------------------------------------------------------------------------
// pages

function renderHome() {
  app.replaceChildren(
    el("h1", {}, "Automated lung ultrasound video analysis"),
    el(
      "p",
      { class: "lead" },
      "Upload lung ultrasound clips and get back a compact summary of " +
        "diagnostically relevant keyframes, with the pleura and abnormal " +
        "findings segmented in color, labeled bounding boxes with " +
        "confidence scores, and infection-suspect frames flagged. " +
        "Results are cached server-side and downloadable as a report " +
        "archive for later examination.",
    ),
    el("p", {}, el("button", { id: "get-started" }, "Get Started")),
  );
  (document.getElementById("get-started") as HTMLButtonElement).onclick = () =>
    navigate("/upload");
}

interface UploadPageState {
  files: File[];
  key: string | null;
  count: number;
}

function renderUpload() {
  // page-local state: a refresh before NEXT abandons the selection
  const state: UploadPageState = { files: [], key: null, count: 0 };

  const input = el("input", { type: "file", multiple: "", accept: "video/*,.y4m,.avi,.zip" });
  const fileList = el("div", { class: "filelist" });
  const messages = el("div");
  const uploadBtn = el("button", { disabled: "" }, "Upload Videos") as HTMLButtonElement;
  const nextBtn = el("button", { disabled: "" }, "NEXT") as HTMLButtonElement;

  (input as HTMLInputElement).onchange = () => {
    state.files = Array.from((input as HTMLInputElement).files ?? []);
    fileList.replaceChildren(
      state.files.length
        ? `${state.files.length} file(s) selected: ` +
            state.files.map((f) => f.name).join(", ")
        : "",
    );
    uploadBtn.disabled = state.files.length === 0;
  };

  uploadBtn.onclick = async () => {
    messages.replaceChildren();
    uploadBtn.disabled = true;
    try {
      const response = await api.upload(
        state.files.map((f) => ({ name: f.name, data: f })),
      );
      state.key = response.key;
      state.count = response.videos;
      messages.replaceChildren(banner("ok", uploadAcknowledgment(response.videos)));
      nextBtn.disabled = false;
    } catch (err) {
      messages.replaceChildren(banner("error", describe(err)));
      uploadBtn.disabled = false;
    }
  };

  nextBtn.onclick = async () => {
    if (!state.key) return;
    nextBtn.disabled = true;
    try {
      await api.process(state.key);
      navigate(`/results/${state.key}`);
    } catch (err) {
      messages.replaceChildren(banner("error", describe(err)));
      nextBtn.disabled = false;
    }
  };

  app.replaceChildren(
    el("h1", {}, "Upload videos"),
    el(
      "p",
      { class: "lead" },
      "Select one or more clips, upload them, then press NEXT to start " +
        "processing. Refresh this page to discard the selection and start over.",
    ),
    el("div", { class: "panel" }, input, fileList, uploadBtn, " ", nextBtn),
    messages,
  );
}

async function renderResults(route: Extract<Route, { page: "results" }>) {
  const token = navToken;
  const heading = el("h1", {}, "Results");
  const statusBox = el("div", { class: "panel" }, "Checking job status…");
  app.replaceChildren(heading, statusBox);

  let delay = 1000;
  for (;;) {
    let status;
    try {
      status = await api.status(route.key);
      delay = 1000;
    } catch (err) {
      if (navToken !== token) return;
      if (err instanceof ApiError && err.status === 404) {
        statusBox.replaceChildren(banner("error", `Unknown job key: ${route.key}`));
        return;
      }
      // transient poll failure: retry with backoff
      statusBox.replaceChildren(banner("error", `Status poll failed, retrying… (${describe(err)})`));
      delay = Math.min(delay * 2, 10_000);
      await new Promise((r) => setTimeout(r, delay));
      continue;
    }
    if (navToken !== token) return;

    if (!isTerminal(status.state)) {
      statusBox.replaceChildren(
        el("p", {}, stateLabel(status.state, status.progress)),
        el("div", { class: "progressbar" },
          el("div", { style: `width:${Math.round(status.progress * 100)}%` })),
      );
      await new Promise((r) => setTimeout(r, nextPollDelay(status.state) ?? 0));
      continue;
    }

    if (status.state === "failed") {
      statusBox.replaceChildren(
        banner("error", `Processing failed: ${status.error ?? "unknown error"}`),
        el("p", {}, el("a", { href: "/upload", "data-link": "" }, "Upload new videos")),
      );
      return;
    }
    break; // complete
  }

  const manifest = await api.results(route.key);
  if (navToken !== token) return;

  const download = el("a", {
    class: "button",
    href: api.downloadUrl(route.key),
    download: "",
  }, "Download all");
  const report = el("a", { href: `/report/${route.key}`, "data-link": "" }, "Report page");
  app.replaceChildren(heading, el("footer", { class: "actions" }, download, report));

  const seeds = new Map(route.seeds);
  for (const video of manifest.videos) {
    const card = await renderVideoCard(route.key, video, seeds, token);
    if (navToken !== token) return;
    app.append(card);
  }
}

async function renderVideoCard(
  key: string,
  video: VideoManifest,
  seeds: Map<number, number>,
  token: number,
): Promise<HTMLElement> {
  let toggles = defaultToggles();
  let entries: KeyframeEntry[] = video.keyframes;

  // a seed in the URL reproduces that exact keyframe sample
  const urlSeed = seeds.get(video.video_id);
  if (urlSeed !== undefined) {
    entries = await api.keyframes(key, video.video_id, 8, urlSeed);
  }

  const player = el("video", { controls: "", loop: "", preload: "metadata" }) as HTMLVideoElement;
  const grid = el("div", { class: "grid" });
  const segBox = el("input", { type: "checkbox" }) as HTMLInputElement;
  const tagBox = el("input", { type: "checkbox" }) as HTMLInputElement;

  const syncView = () => {
    segBox.checked = toggles.segmentation;
    tagBox.checked = toggles.tagging;
    player.src = videoUrl(video, toggles);
    grid.replaceChildren(...entries.map((entry) => keyframeTile(entry, toggles)));
  };

  segBox.onchange = () => {
    toggles = applyToggle(toggles, "segmentation");
    syncView();
  };
  tagBox.onchange = () => {
    toggles = applyToggle(toggles, "tagging");
    syncView();
  };

  const resample = el("button", { class: "ghost", title: "Generate another random set of keyframes" }, "↻ Random frames") as HTMLButtonElement;
  resample.onclick = async () => {
    const seed = freshSeed();
    resample.disabled = true;
    try {
      const fresh = await api.keyframes(key, video.video_id, 8, seed);
      if (navToken !== token) return;
      entries = fresh;
      seeds.set(video.video_id, seed);
      history.pushState(null, "", `/results/${key}${seedsToQuery(seeds)}`);
      syncView();
    } finally {
      resample.disabled = false;
    }
  };

  const card = el(
    "section",
    { class: "panel video-card" },
    el("h2", { class: "title" }, `${video.source_name} — ${video.keyframe_count} keyframes`),
    el(
      "div",
      { class: "player" },
      player,
      el(
        "div",
        { class: "toggles" },
        el("label", {}, segBox, " Segmentation"),
        el("label", {}, tagBox, " Object tagging"),
      ),
    ),
    el(
      "div",
      {},
      el("div", { class: "keyframes-head" }, el("h2", {}, "Keyframes"), resample),
      grid,
    ),
  );
  syncView();
  return card;
}

function keyframeTile(entry: KeyframeEntry, toggles: ViewToggles): HTMLElement {
  const img = el("img", { src: keyframeUrl(entry, toggles), alt: `frame ${entry.index}` });
  const tile = el("div", { class: "tile" }, img, el("span", { class: "idx" }, `#${entry.index}`));
  if (entry.abnormal) {
    tile.append(el("span", { class: "flag" }, "ABNORMAL"));
  }
  (img as HTMLImageElement).onerror = () => {
    tile.classList.add("broken");
    tile.replaceChildren("image unavailable");
  };
  tile.onclick = () => openViewer(entry, toggles);
  return tile;
}

function openViewer(entry: KeyframeEntry, toggles: ViewToggles) {
  const caption =
    `frame ${entry.index} — ${keyframeUrl(entry, toggles).split("_").pop()?.replace(".png", "")}` +
    (entry.abnormal ? " — flagged abnormal" : "");
  viewer.replaceChildren(
    el("img", { src: keyframeUrl(entry, toggles) }),
    el("div", { class: "caption" }, caption),
  );
  viewer.classList.remove("hidden");
}

viewer.onclick = () => viewer.classList.add("hidden");

async function renderReport(route: Extract<Route, { page: "report" }>) {
  const token = navToken;
  app.replaceChildren(el("h1", {}, "Report"), el("p", {}, "Loading…"));
  let manifest: ResultsManifest;
  try {
    manifest = await api.results(route.key);
  } catch (err) {
    if (navToken !== token) return;
    const detail =
      err instanceof ApiError && err.status === 409
        ? "This job has not completed yet; results are available once processing finishes."
        : describe(err);
    app.replaceChildren(el("h1", {}, "Report"), banner("error", detail));
    return;
  }
  if (navToken !== token) return;

  const rows = manifest.videos.map((video) =>
    el(
      "tr",
      {},
      el("td", {}, video.source_name),
      el("td", {}, String(video.keyframe_count)),
      el("td", {}, String(abnormalCount(video.keyframes))),
      el("td", {}, el("a", { href: `/results/${manifest.key}`, "data-link": "" }, "view")),
    ),
  );
  app.replaceChildren(
    el("h1", {}, "Report"),
    el(
      "p",
      { class: "lead" },
      "Summary of the analysis run. Abnormal counts refer to flagged " +
        "frames in each video's default keyframe set.",
    ),
    el(
      "table",
      { class: "report" },
      el(
        "tr",
        {},
        el("th", {}, "Video"),
        el("th", {}, "Keyframes"),
        el("th", {}, "Abnormal (default set)"),
        el("th", {}, ""),
      ),
      ...rows,
    ),
    el(
      "footer",
      { class: "actions" },
      el("a", { class: "button", href: api.downloadUrl(manifest.key), download: "" }, "Download all"),
    ),
  );
}

function renderAbout() {
  app.replaceChildren(
    el("h1", {}, "About"),
    el("p", { class: "lead" }, "How to use the tool, start to finish:"),
    el(
      "ol",
      {},
      el("li", {}, "Press “Get Started” on the home page to reach the upload page."),
      el("li", {}, "Pick one or more ultrasound clips with “Upload Videos”. " +
        "You will see an acknowledgment with the number of uploaded videos. " +
        "Refresh the page if you need to change the selection."),
      el("li", {}, "Press NEXT to send the videos for processing and watch the progress screen."),
      el("li", {}, "On the results page each video appears with its summarized " +
        "player on the left and keyframes on the right. Segmentation is shown " +
        "by default; use the checkboxes to switch to object tagging or back to " +
        "the plain summary — switching never reprocesses the video."),
      el("li", {}, "Keyframes flagged ABNORMAL carry suspected infection markers " +
        "(B-lines or consolidations). Click any keyframe to inspect it enlarged."),
      el("li", {}, "The ↻ control fetches a fresh random set of keyframes per video."),
      el("li", {}, "“Download all” saves every summarized, segmented, and tagged " +
        "video plus keyframes and annotations as a zip for your records."),
    ),
  );
}

function renderContact() {
  app.replaceChildren(
    el("h1", {}, "Contact"),
    el("p", { class: "lead" }, "Questions, clinical feedback, or deployment help:"),
    el(
      "ul",
      {},
      el("li", {}, "File an issue in the project repository"),
      el("li", {}, "Service health endpoint: ", el("code", {}, "/api/health")),
    ),
  );
}

function renderNotFound(path: string) {
  app.replaceChildren(
    el("h1", {}, "Page not found"),
    el("p", {}, `No page at ${path}.`),
    el("p", {}, el("a", { href: "/", "data-link": "" }, "Back to home")),
  );
}

// ---------------------------------------------------------------------------
// routing

function render() {
  navToken += 1;
  viewer.classList.add("hidden");
  const route = parseRoute(location.pathname, location.search);
  switch (route.page) {
    case "home":
      return renderHome();
    case "upload":
      return renderUpload();
    case "results":
      return void renderResults(route);
    case "report":
      return void renderReport(route);
    case "about":
      return renderAbout();
    case "contact":
      return renderContact();
    case "not-found":
      return renderNotFound(route.path);
  }
}

document.addEventListener("click", (event) => {
  const anchor = (event.target as HTMLElement).closest("a[data-link]");
  if (anchor instanceof HTMLAnchorElement) {
    event.preventDefault();
    navigate(anchor.getAttribute("href") ?? "/");
  }
});

window.addEventListener("popstate", render);
render();

export { render, navigate, routePath };
