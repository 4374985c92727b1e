/**
 * Pure view-model logic behind the results page.
 *
 * View switching is intentionally a pure function of already-fetched
 * manifest data: toggling segmentation/object tagging swaps URLs only
 * and never talks to the server, which is what makes completed results
 * instant to browse.
 */

import type { JobState, KeyframeEntry, Variant, VideoManifest } from "./api.js";

export interface ViewToggles {
  segmentation: boolean;
  tagging: boolean;
}

/** The segmentation view is on by default. */
export function defaultToggles(): ViewToggles {
  return { segmentation: true, tagging: false };
}

/**
 * The two checkboxes behave exclusively: switching one on releases the
 * other. Turning both off falls back to the plain summarized view.
 */
export function applyToggle(current: ViewToggles, clicked: keyof ViewToggles): ViewToggles {
  const next = { ...current, [clicked]: !current[clicked] };
  if (clicked === "segmentation" && next.segmentation) next.tagging = false;
  if (clicked === "tagging" && next.tagging) next.segmentation = false;
  return next;
}

export function activeVariant(toggles: ViewToggles): Variant {
  if (toggles.tagging) return "tagged";
  if (toggles.segmentation) return "segmented";
  return "summarized";
}

export function videoUrl(video: VideoManifest, toggles: ViewToggles): string {
  return video.urls[activeVariant(toggles)];
}

export function keyframeUrl(entry: KeyframeEntry, toggles: ViewToggles): string {
  return entry.urls[activeVariant(toggles)];
}

export function uploadAcknowledgment(count: number): string {
  return count === 1 ? "1 video uploaded" : `${count} videos uploaded`;
}

export function abnormalCount(entries: KeyframeEntry[]): number {
  return entries.filter((e) => e.abnormal).length;
}

export function stateLabel(state: JobState, progress: number): string {
  switch (state) {
    case "uploaded":
      return "Uploaded, waiting to be queued";
    case "queued":
      return "Queued for processing";
    case "processing":
      return `Processing ${Math.round(progress * 100)}%`;
    case "complete":
      return "Complete";
    case "failed":
      return "Failed";
  }
}

/** Fresh 32-bit seed for the random-keyframes control. */
export function freshSeed(random: () => number = Math.random): number {
  return Math.floor(random() * 0x100000000) >>> 0;
}
