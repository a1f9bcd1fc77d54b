/** JSON contracts of the triage service, mirrored field-for-field. */

export interface Verdict {
  label: "phishing" | "safe";
  percentage: number;
  category: "unlikely" | "possibly" | "likely" | "almost_certainly";
}

export interface Finding {
  feature: string;
  quoted_span: string;
  rationale: string;
  /** Codepoint offsets [start, end) into the email body, or null when
   * the quoted span could not be located. */
  span_location: [number, number] | null;
  match_quality: "exact" | "normalized" | "unlocated";
}

export interface AnalysisReport {
  schema_version: number;
  verdict: Verdict;
  explanation: string;
  features_found: string[];
  findings: Finding[];
  countermeasures: string[];
  feature_score: number;
  raw_output: string;
  warnings: string[];
  prompt_hash: string;
  created_at: string;
}

export interface IntensitySignal {
  hue: "red" | "blue";
  intensity: number;
  percentage: number;
  feature_score: number;
}

export interface AnalysisBody {
  schema_version: number;
  id: string;
  analysis: AnalysisReport;
  intensity: IntensitySignal;
  cached?: boolean;
}

export interface InProgress {
  status: "in_progress";
  poll: string;
}

export interface EmailSummary {
  id: string;
  message_id: string;
  sender_name: string;
  sender_address: string;
  subject: string;
  received_at: string;
  sender_in_contacts: boolean;
  analyzed: boolean;
  verdict: Verdict | null;
}

export interface EmailDetail extends EmailSummary {
  schema_version: number;
  body_text: string;
  body_html: string;
  excluded_features: string[];
}

export interface Turn {
  role: "user" | "assistant";
  text: string;
  at: string;
}

export interface Thread {
  message_id: string;
  turns: Turn[];
}

export interface CatalogFeature {
  name: string;
  description: string;
  examples: string[];
  weight: number;
  aliases: string[];
}

export interface ErrorEnvelope {
  schema_version: number;
  code: string;
  stage: string;
  message: string;
}
