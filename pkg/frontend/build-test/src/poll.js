/**
 * Status polling cadence: once per second while the job is moving,
 * stop for good at a terminal state. At most one poll is in flight at
 * a time (the app awaits each poll before scheduling the next).
 */
export const POLL_INTERVAL_MS = 1000;
export function isTerminal(state) {
    return state === "complete" || state === "failed";
}
/** Delay before the next status poll, or null to stop polling. */
export function nextPollDelay(state) {
    return isTerminal(state) ? null : POLL_INTERVAL_MS;
}
