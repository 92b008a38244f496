import type { AgreementStats, Channel, FeatureContribution } from "./types.js";

export const CHANNEL_BADGES: Record<Channel, string> = {
  engineered: "ENG",
  "text-term": "TXT",
  "named-entity": "ENT",
};

export function formatScorePercent(score: number): string {
  return `${(score * 100).toFixed(1)}%`;
}

export function formatContribution(value: number): string {
  const sign = value >= 0 ? "+" : "−";
  return `${sign}${Math.abs(value).toFixed(3)}`;
}

export interface ChipView {
  name: string;
  badge: string;
  channel: Channel;
  signed: string;
  pushesHateful: boolean;
}

export function chipViews(features: FeatureContribution[]): ChipView[] {
  return features.map((feature) => ({
    name: feature.name,
    badge: CHANNEL_BADGES[feature.channel],
    channel: feature.channel,
    signed: formatContribution(feature.contribution),
    pushesHateful: feature.contribution > 0,
  }));
}

export function formatAgreement(stats: AgreementStats): string {
  if (stats.n_reviewed === 0) {
    return "no reviews yet";
  }
  return `${(stats.agreement_rate * 100).toFixed(1)}% agreement over ${stats.n_reviewed} reviewed`;
}

export function labelWord(label: number | null): string {
  if (label === null) return "unlabeled";
  return label === 1 ? "hateful" : "benign";
}
