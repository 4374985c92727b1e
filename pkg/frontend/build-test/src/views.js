/**
 * Pure view-model logic behind the results page.
 *
 * View switching is intentionally a pure function of already-fetched
 * manifest data: toggling segmentation/object tagging swaps URLs only
 * and never talks to the server, which is what makes completed results
 * instant to browse.
 */
/** The segmentation view is on by default. */
export function defaultToggles() {
    return { segmentation: true, tagging: false };
}
/**
 * The two checkboxes behave exclusively: switching one on releases the
 * other. Turning both off falls back to the plain summarized view.
 */
export function applyToggle(current, clicked) {
    const next = { ...current, [clicked]: !current[clicked] };
    if (clicked === "segmentation" && next.segmentation)
        next.tagging = false;
    if (clicked === "tagging" && next.tagging)
        next.segmentation = false;
    return next;
}
export function activeVariant(toggles) {
    if (toggles.tagging)
        return "tagged";
    if (toggles.segmentation)
        return "segmented";
    return "summarized";
}
export function videoUrl(video, toggles) {
    return video.urls[activeVariant(toggles)];
}
export function keyframeUrl(entry, toggles) {
    return entry.urls[activeVariant(toggles)];
}
export function uploadAcknowledgment(count) {
    return count === 1 ? "1 video uploaded" : `${count} videos uploaded`;
}
export function abnormalCount(entries) {
    return entries.filter((e) => e.abnormal).length;
}
export function stateLabel(state, progress) {
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
export function freshSeed(random = Math.random) {
    return Math.floor(random() * 0x100000000) >>> 0;
}
