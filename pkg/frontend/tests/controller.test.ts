/** End-to-end view behavior against the mocked service: verdict tints,
 * highlight toggles, and the question thread. */

import { describe, expect, it } from "vitest";

import { CyriClient } from "../src/api.js";
import { TriageController } from "../src/controller.js";
import { Speaker } from "../src/speech.js";
import {
  mockApi,
  PHISHING_ANALYSIS,
  SAFE_ANALYSIS,
  type MockApi,
} from "./fixtures.js";

async function loadedController(api: MockApi = mockApi()) {
  const controller = new TriageController(
    new CyriClient("http://triage.test", api.fetch),
    new Speaker(null),
  );
  await controller.loadCatalog();
  await controller.loadDate(null);
  return { api, controller };
}

/** Alpha of the page tint, read back out of the rendered markup. */
function backgroundAlpha(html: string, rgb: string): number {
  const pattern = new RegExp(
    `background-color: rgba\\(${rgb}, ([\\d.]+)\\)`,
  );
  const match = html.match(pattern);
  expect(match, `no rgba(${rgb}, ...) tint in view`).not.toBeNull();
  return Number(match![1]);
}

describe("verdict tinting", () => {
  it("shows the phishing bundle on red at the signalled intensity", async () => {
    const { controller } = await loadedController();
    await controller.select("em-1");
    const html = controller.render();
    expect(html).toContain('data-hue="red"');
    const alpha = backgroundAlpha(html, "220, 38, 38");
    expect(
      Math.abs(alpha - PHISHING_ANALYSIS.intensity.intensity),
    ).toBeLessThanOrEqual(0.01);
  });

  it("shows the safe bundle on blue at the signalled intensity", async () => {
    const { controller } = await loadedController();
    await controller.select("em-2");
    const html = controller.render();
    expect(html).toContain('data-hue="blue"');
    const alpha = backgroundAlpha(html, "37, 99, 235");
    expect(
      Math.abs(alpha - SAFE_ANALYSIS.intensity.intensity),
    ).toBeLessThanOrEqual(0.01);
  });
});

describe("feature chips", () => {
  const urgencyMark = '<mark data-feature="Urgency (Scarcity)"';

  it("hides and restores highlights and list rows per feature", async () => {
    const { controller } = await loadedController();
    await controller.select("em-1");

    let html = controller.render();
    expect(html).toContain(urgencyMark);
    expect(html).toContain("within 24 hours</mark>");

    controller.toggleFeature("Urgency (Scarcity)");
    html = controller.render();
    expect(html).not.toContain(urgencyMark);
    expect(html).not.toContain("<strong>Urgency (Scarcity)</strong>");
    // other features keep their highlights
    expect(html).toContain('<mark data-feature="Undesirable Consequences"');
    // the chip stays visible so the exclusion can be undone
    expect(html).toContain(
      'class="chip excluded" data-action="toggle-feature"' +
        ' data-feature="Urgency (Scarcity)"',
    );

    controller.toggleFeature("Urgency (Scarcity)");
    html = controller.render();
    expect(html).toContain(urgencyMark);
  });

  it("excluding a feature removes exactly its findings row", async () => {
    const { controller } = await loadedController();
    await controller.select("em-1");
    expect(controller.render().match(/<li class="finding/g)).toHaveLength(4);
    controller.toggleFeature("Call to Action");
    expect(controller.render().match(/<li class="finding/g)).toHaveLength(3);
  });
});

describe("question thread", () => {
  it("a submitted query adds exactly two new bubbles", async () => {
    const { controller } = await loadedController();
    await controller.select("em-1");
    expect(controller.render().match(/class="bubble /g)).toBeNull();

    await controller.submitQuery("Should I reply to this?");
    const html = controller.render();
    const bubbles = html.match(/class="bubble [a-z]+"/g) ?? [];
    expect(bubbles).toEqual([
      'class="bubble user"',
      'class="bubble assistant"',
    ]);
    expect(html).toContain("Should I reply to this?");
    expect(html).toContain("Delete it and report it");
  });

  it("shows the user bubble optimistically while the reply is pending", async () => {
    const { controller } = await loadedController();
    await controller.select("em-1");

    const snapshots: string[] = [];
    controller.onChange = () => snapshots.push(controller.render());
    const pending = controller.submitQuery("Is the link dangerous?");

    // the synchronous part has already rendered the optimistic state
    const inflight = snapshots[0];
    expect(inflight).toContain('class="bubble user"');
    expect(inflight).toContain("Is the link dangerous?");
    expect(inflight).toContain('class="bubble assistant pending"');
    expect(inflight).toContain("disabled");

    await pending;
    const settled = snapshots[snapshots.length - 1];
    expect(settled).toContain('class="bubble assistant"');
    expect(settled).not.toContain("pending");
    expect(settled).not.toContain("disabled");
  });

  it("rolls back the optimistic bubble and keeps the input on failure", async () => {
    const { api, controller } = await loadedController();
    await controller.select("em-1");
    api.failNextQuery = 503;

    await controller.submitQuery("still there?");
    const html = controller.render();
    expect(html.match(/class="bubble /g)).toBeNull();
    expect(html).toContain('<p class="error">model backend unreachable</p>');
    expect(html).toContain('value="still there?"');
    expect(controller.queryInflight).toBe(false);

    // retry succeeds and the thread catches up
    await controller.submitQuery("still there?");
    expect(controller.render().match(/class="bubble [a-z]+"/g)).toHaveLength(2);
  });

  it("allows only one in-flight query per email", async () => {
    const { api, controller } = await loadedController();
    await controller.select("em-1");
    const queriesBefore = api.calls.filter((c) => c.url.endsWith("/query"));
    expect(queriesBefore).toHaveLength(0);

    const first = controller.submitQuery("one");
    const second = controller.submitQuery("two"); // dropped: already in flight
    await Promise.all([first, second]);

    expect(api.calls.filter((c) => c.url.endsWith("/query"))).toHaveLength(1);
    expect(controller.thread?.turns).toHaveLength(2);
  });

  it("ignores blank queries", async () => {
    const { api, controller } = await loadedController();
    await controller.select("em-1");
    await controller.submitQuery("   ");
    expect(api.calls.filter((c) => c.url.endsWith("/query"))).toHaveLength(0);
  });

  it("reloading the email refetches the same thread", async () => {
    const { controller } = await loadedController();
    await controller.select("em-1");
    await controller.submitQuery("What should I do?");
    const turns = controller.thread?.turns;

    await controller.select("em-1"); // same email, fresh fetch
    expect(controller.thread?.turns).toEqual(turns);
    expect(controller.render().match(/class="bubble [a-z]+"/g)).toHaveLength(2);
  });
});

describe("email and date navigation", () => {
  it("loads a date with a read-only listing call", async () => {
    const { api, controller } = await loadedController();
    api.calls.length = 0;
    await controller.loadDate("2026-08-13");
    expect(api.calls).toEqual([
      {
        method: "GET",
        url: "http://triage.test/emails?date=2026-08-13",
        body: null,
      },
    ]);
    expect(controller.selectedDate).toBe("2026-08-13");
  });

  it("shows the degraded view for an email without analysis", async () => {
    const { controller } = await loadedController();
    await controller.select("em-3");
    const html = controller.render();
    expect(html).toContain('data-hue="none"');
    expect(html).toContain("No analysis yet.");
    expect(html).toContain('data-action="analyze"');
  });

  it("analyze on a fresh email swaps in the full view", async () => {
    const { controller } = await loadedController();
    await controller.select("em-3");
    await controller.analyze();
    const html = controller.render();
    expect(html).toContain('data-hue="blue"');
    expect(html).toContain("No questions asked yet.");
  });

  it("selecting an email resets exclusions to the stored set", async () => {
    const { controller } = await loadedController();
    await controller.select("em-1");
    controller.toggleFeature("Urgency (Scarcity)");
    await controller.select("em-2");
    await controller.select("em-1");
    expect(controller.excluded.size).toBe(0);
  });
});

describe("finding navigation", () => {
  it("cycles through visible findings and wraps", async () => {
    const { controller } = await loadedController();
    await controller.select("em-1");
    expect(controller.activeFinding).toBe(-1);
    controller.cycleFinding();
    expect(controller.activeFinding).toBe(0);
    expect(controller.render()).toContain(
      'class="finding active" data-action="goto-finding" data-index="0"',
    );
    controller.cycleFinding();
    controller.cycleFinding();
    controller.cycleFinding();
    expect(controller.activeFinding).toBe(3);
    controller.cycleFinding();
    expect(controller.activeFinding).toBe(0); // wrapped
  });

  it("stays clear of hidden findings after an exclusion", async () => {
    const { controller } = await loadedController();
    await controller.select("em-1");
    controller.cycleFinding();
    controller.toggleFeature("Urgency (Scarcity)");
    expect(controller.activeFinding).toBe(-1);
    controller.cycleFinding();
    expect(controller.activeFinding).toBe(0);
    // three findings remain visible; cycling never reaches index 3
    for (let i = 0; i < 5; i++) controller.cycleFinding();
    expect(controller.activeFinding).toBeLessThan(3);
  });

  it("toggling the order re-sorts the findings list", async () => {
    const { controller } = await loadedController();
    await controller.select("em-1");
    const rowsOf = (html: string) =>
      [
        ...html.matchAll(
          /<li class="finding[^>]*><span[^>]*><\/span><strong>([^<]+)<\/strong>/g,
        ),
      ].map((m) => m[1]);

    let html = controller.render();
    expect(html).toContain(
      '<button data-action="toggle-order">document order</button>',
    );
    expect(rowsOf(html)).toEqual([
      "Urgency (Scarcity)",
      "Undesirable Consequences",
      "Authority/Impersonation of Trusted Entities",
      "Call to Action", // unlocated sorts last in document order
    ]);

    controller.toggleOrder();
    html = controller.render();
    expect(html).toContain(
      '<button data-action="toggle-order">severity order</button>',
    );
    expect(rowsOf(html)).toEqual([
      "Urgency (Scarcity)",
      "Undesirable Consequences",
      "Call to Action",
      "Authority/Impersonation of Trusted Entities",
    ]);
  });
});

describe("speech control", () => {
  it("surfaces a notice when synthesis is unavailable", async () => {
    const { controller } = await loadedController();
    await controller.select("em-1");
    controller.speakExplanation();
    expect(controller.render()).toContain(
      '<p class="notice">speech unavailable</p>',
    );
  });
});
