import type { TriageForm } from "./types.js";

/** Mirrors the app server's CheckRequest invariants. */
export function missingFields(form: TriageForm): string[] {
  const missing: string[] = [];
  if (!form.product.trim()) missing.push("product");
  if (!form.component.trim()) missing.push("component");
  if (!form.headline.trim() && !form.description.trim()) {
    missing.push("headline", "description");
  }
  return missing;
}

export function formIsValid(form: TriageForm): boolean {
  return missingFields(form).length === 0;
}

/** Render a server probability as a two-decimal percentage. */
export function formatProbability(probability: number): string {
  return `${(probability * 100).toFixed(2)}%`;
}
