/** Canned service responses for tests: one phishing and one safe bundle,
 * shaped exactly like the live JSON, plus a stateful mock fetch that
 * serves them and records every request. */

import type {
  AnalysisBody,
  AnalysisReport,
  EmailDetail,
  Finding,
  Thread,
} from "../src/types.js";
import type { FetchLike } from "../src/api.js";

/** Codepoint offsets of the first occurrence of quote in body. */
function locate(body: string, quote: string): [number, number] {
  const points = Array.from(body);
  const target = Array.from(quote);
  for (let i = 0; i + target.length <= points.length; i++) {
    let hit = true;
    for (let j = 0; j < target.length; j++) {
      if (points[i + j] !== target[j]) {
        hit = false;
        break;
      }
    }
    if (hit) return [i, i + target.length];
  }
  throw new Error(`quote not in body: ${quote}`);
}

function located(feature: string, body: string, quote: string): Finding {
  return {
    feature,
    quoted_span: quote,
    rationale: `signals ${feature.toLowerCase()}`,
    span_location: locate(body, quote),
    match_quality: "exact",
  };
}

export const PHISHING_BODY =
  "Dear customer,\n\n" +
  "We detected unusual activity. Verify your details within 24 hours " +
  "or your account will be permanently closed.\n\n" +
  "Click here: http://paypal-secure.example/verify\n\n" +
  "The PayPal Team";

export const PHISHING_EMAIL: EmailDetail = {
  schema_version: 1,
  id: "em-1",
  message_id: "<20260813.9001@paypal-secure.example>",
  sender_name: "PayPal Support",
  sender_address: "support@paypal-secure.example",
  subject: "Urgent: verify your account",
  received_at: "2026-08-13T08:12:00+00:00",
  sender_in_contacts: false,
  analyzed: true,
  verdict: { label: "phishing", percentage: 96, category: "almost_certainly" },
  body_text: PHISHING_BODY,
  body_html: "",
  excluded_features: [],
};

const PHISHING_REPORT: AnalysisReport = {
  schema_version: 1,
  verdict: { label: "phishing", percentage: 96, category: "almost_certainly" },
  explanation:
    "The message impersonates PayPal, imposes a 24 hour deadline, and " +
    "threatens account closure to push you toward an unverified link.",
  features_found: [
    "Urgency (Scarcity)",
    "Undesirable Consequences",
    "Authority/Impersonation of Trusted Entities",
    "Call to Action",
  ],
  findings: [
    located("Urgency (Scarcity)", PHISHING_BODY, "within 24 hours"),
    located(
      "Undesirable Consequences",
      PHISHING_BODY,
      "your account will be permanently closed",
    ),
    located(
      "Authority/Impersonation of Trusted Entities",
      PHISHING_BODY,
      "The PayPal Team",
    ),
    {
      feature: "Call to Action",
      quoted_span: "Click the verification link",
      rationale: "directs the reader to act on the embedded link",
      span_location: null,
      match_quality: "unlocated",
    },
  ],
  countermeasures: [
    "Do not click the link; open paypal.com directly instead.",
    "Report the message to your security team.",
  ],
  // noisy-or of weights 0.9, 0.9, 0.6, 0.9
  feature_score: 0.9996,
  raw_output: "This email is Almost certainly phishing (96%)\n...",
  warnings: ["could not locate quoted span for 'Call to Action'"],
  prompt_hash:
    "3f786850e387550fdab836ed7e6dc881de23001b7b4c8ac03f87ba9ff9a4f6cd",
  created_at: "2026-08-13T08:15:00+00:00",
};

export const PHISHING_ANALYSIS: AnalysisBody = {
  schema_version: 1,
  id: "em-1",
  analysis: PHISHING_REPORT,
  // 0.5 * 96/100 + 0.5 * 0.9996
  intensity: {
    hue: "red",
    intensity: 0.9798,
    percentage: 96,
    feature_score: 0.9996,
  },
};

export const SAFE_BODY =
  "Hi,\n\nAttached are the minutes from Tuesday. Let me know if I missed " +
  "anything.\n\nBest,\nSam";

export const SAFE_EMAIL: EmailDetail = {
  schema_version: 1,
  id: "em-2",
  message_id: "<20260812.17@colleague.example>",
  sender_name: "Sam Rivera",
  sender_address: "sam@colleague.example",
  subject: "Minutes from Tuesday",
  received_at: "2026-08-12T15:40:00+00:00",
  sender_in_contacts: true,
  analyzed: true,
  verdict: { label: "safe", percentage: 95, category: "almost_certainly" },
  body_text: SAFE_BODY,
  body_html: "",
  excluded_features: [],
};

const SAFE_REPORT: AnalysisReport = {
  schema_version: 1,
  verdict: { label: "safe", percentage: 95, category: "almost_certainly" },
  explanation:
    "A routine note from a known colleague with no pressure tactics, " +
    "no requests for information, and no links.",
  features_found: [],
  findings: [],
  countermeasures: [],
  feature_score: 0.0,
  raw_output: "This email is Almost certainly safe (95%)\n...",
  warnings: [],
  prompt_hash:
    "aec070645fe53ee3b3763059376134f058cc337247c978add178b6ccdfb0019f",
  created_at: "2026-08-12T15:45:00+00:00",
};

export const SAFE_ANALYSIS: AnalysisBody = {
  schema_version: 1,
  id: "em-2",
  analysis: SAFE_REPORT,
  // safe verdicts map percentage straight to intensity
  intensity: {
    hue: "blue",
    intensity: 0.95,
    percentage: 95,
    feature_score: 0.0,
  },
};

export const UNANALYZED_EMAIL: EmailDetail = {
  schema_version: 1,
  id: "em-3",
  message_id: "<20260814.3@newsletter.example>",
  sender_name: "",
  sender_address: "digest@newsletter.example",
  subject: "Weekly digest",
  received_at: "2026-08-14T06:00:00+00:00",
  sender_in_contacts: false,
  analyzed: false,
  verdict: null,
  body_text: "This week in the newsletter: nothing of note.",
  body_html: "",
  excluded_features: [],
};

export const CATALOG_FEATURES = [
  { name: "Authority/Impersonation of Trusted Entities", weight: 0.6 },
  { name: "Urgency (Scarcity)", weight: 0.9 },
  { name: "Undesirable Consequences", weight: 0.9 },
  { name: "Call to Action", weight: 0.9 },
].map((f) => ({ ...f, description: "", examples: [], aliases: [] }));

export interface RecordedCall {
  method: string;
  url: string;
  body: unknown;
}

export interface MockApi {
  fetch: FetchLike;
  calls: RecordedCall[];
  /** Per-email conversation state, mutated by query like the live server. */
  threads: Map<string, Thread>;
  /** When set, the next query request fails with this status. */
  failNextQuery: number | null;
  reply: string;
}

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function notFound(message: string): Response {
  return json(
    { schema_version: 1, code: "not_found", stage: "store", message },
    404,
  );
}

/** In-memory stand-in for the service, covering the routes the UI uses. */
export function mockApi(): MockApi {
  const emails = new Map<string, EmailDetail>([
    [PHISHING_EMAIL.id, PHISHING_EMAIL],
    [SAFE_EMAIL.id, SAFE_EMAIL],
    [UNANALYZED_EMAIL.id, UNANALYZED_EMAIL],
  ]);
  const analyses = new Map<string, AnalysisBody>([
    [PHISHING_EMAIL.id, PHISHING_ANALYSIS],
    [SAFE_EMAIL.id, SAFE_ANALYSIS],
  ]);
  const threads = new Map<string, Thread>(
    [...emails.values()].map((e) => [
      e.id,
      { message_id: e.message_id, turns: [] },
    ]),
  );

  const api: MockApi = {
    calls: [],
    threads,
    failNextQuery: null,
    reply: "Delete it and report it; do not follow the link.",
    fetch: async (url: string, init?: RequestInit): Promise<Response> => {
      const method = init?.method ?? "GET";
      const body = init?.body ? JSON.parse(String(init.body)) : null;
      api.calls.push({ method, url, body });

      const path = url.replace(/^https?:\/\/[^/]+/, "").split("?")[0];
      const summaryOf = (detail: EmailDetail) => {
        const { body_text, body_html, excluded_features, ...summary } = detail;
        void body_text, body_html, excluded_features;
        return summary;
      };

      if (method === "GET" && path === "/emails") {
        return json({
          schema_version: 1,
          emails: [...emails.values()].map(summaryOf),
        });
      }
      if (method === "GET" && path === "/catalog") {
        return json({ schema_version: 1, features: CATALOG_FEATURES });
      }

      const match = path.match(/^\/emails\/([^/]+)(?:\/([a-z]+))?$/);
      if (!match) return notFound(`no route ${path}`);
      const [, id, action] = match;
      const email = emails.get(id);
      if (!email) return notFound(`no email '${id}'`);

      if (!action && method === "GET") return json(email);
      if (action === "analysis" && method === "GET") {
        const analysis = analyses.get(id);
        return analysis
          ? json(analysis)
          : notFound("no analysis yet; POST /analyze first");
      }
      if ((action === "analyze" || action === "reanalyze") && method === "POST") {
        let analysis = analyses.get(id);
        if (!analysis) {
          // first analysis of a fresh email: reuse the safe report shape
          analysis = { ...SAFE_ANALYSIS, id };
          analyses.set(id, analysis);
        }
        return json({ ...analysis, cached: false });
      }
      if (action === "thread" && method === "GET") {
        return json({ schema_version: 1, thread: threads.get(id) });
      }
      if (action === "query" && method === "POST") {
        if (api.failNextQuery !== null) {
          const status = api.failNextQuery;
          api.failNextQuery = null;
          return json(
            {
              schema_version: 1,
              code: "gateway_unavailable",
              stage: "gateway",
              message: "model backend unreachable",
            },
            status,
          );
        }
        const thread = threads.get(id)!;
        thread.turns.push(
          { role: "user", text: body.text, at: "2026-08-14T09:00:00+00:00" },
          {
            role: "assistant",
            text: api.reply,
            at: "2026-08-14T09:00:02+00:00",
          },
        );
        return json({ schema_version: 1, reply: api.reply, thread });
      }
      return notFound(`no route ${method} ${path}`);
    },
  };
  return api;
}
