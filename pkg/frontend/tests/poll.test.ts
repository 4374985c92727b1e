import assert from "node:assert/strict";
import { test } from "node:test";

import { isTerminal, nextPollDelay, POLL_INTERVAL_MS } from "../src/poll.js";

test("polls every second while the job is moving", () => {
  for (const state of ["uploaded", "queued", "processing"] as const) {
    assert.equal(nextPollDelay(state), POLL_INTERVAL_MS);
    assert.equal(isTerminal(state), false);
  }
  assert.equal(POLL_INTERVAL_MS, 1000);
});

test("stops for good at terminal states", () => {
  for (const state of ["complete", "failed"] as const) {
    assert.equal(nextPollDelay(state), null);
    assert.equal(isTerminal(state), true);
  }
});
