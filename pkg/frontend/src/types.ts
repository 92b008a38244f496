// Payload shapes mirroring the review service API. The client never
// computes scores or attributions itself; it is a pure view over these.

export type Channel = "engineered" | "text-term" | "named-entity";

export interface FeatureContribution {
  name: string;
  channel: Channel;
  contribution: number;
}

export interface AugmentedMeme {
  id: string;
  score: number;
  predicted_label: number;
  top_features: FeatureContribution[];
  engineered: Record<string, number>;
  caption: string;
}

export interface ReviewItem {
  id: string;
  augmented: AugmentedMeme;
  img: string;
  text: string;
  status: "pending" | "labeled";
  human_label: number | null;
  labeled_at: string | null;
  annotator: string | null;
}

export interface AgreementStats {
  n_reviewed: number;
  agreement_rate: number;
  human_positive_rate: number;
  model_positive_rate: number;
  confusion: Record<string, number>;
}

export type SortOrder = "score" | "id";
