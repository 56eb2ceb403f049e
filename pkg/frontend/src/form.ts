/**
 * State machine for the provision-activity panel: two text fields (place,
 * publisher) where typing in one populates ranked suggestions under the
 * other. All DOM work lives in the render callback, so the machine itself
 * is testable without a browser.
 */

import { SuggestClient, Suggestion } from "./api.js";
import { debounce } from "./debounce.js";

export type FieldName = "place" | "publisher";

export const FIELDS: readonly FieldName[] = ["place", "publisher"];

export const COMPANION: Record<FieldName, FieldName> = {
  place: "publisher",
  publisher: "place",
};

// Floor on the debounce interval; callers may only lengthen it.
export const MIN_DEBOUNCE_MS = 150;

export interface FormSnapshot {
  values: Record<FieldName, string>;
  suggestions: Record<FieldName, Suggestion[]>;
  error: string | null;
}

export class ProvisionActivityForm {
  private values: Record<FieldName, string> = { place: "", publisher: "" };
  private suggestions: Record<FieldName, Suggestion[]> = { place: [], publisher: [] };
  private error: string | null = null;
  // One counter per suggestion list; a response is rendered only while it is
  // still the newest request for that list, so late arrivals are discarded.
  private sequence: Record<FieldName, number> = { place: 0, publisher: 0 };
  private pending: Promise<void> = Promise.resolve();
  private readonly trigger: Record<FieldName, (() => void) & { cancel: () => void }>;

  constructor(
    private readonly client: SuggestClient,
    private readonly onRender: (snapshot: FormSnapshot) => void = () => {},
    debounceMs: number = MIN_DEBOUNCE_MS,
  ) {
    const wait = Math.max(debounceMs, MIN_DEBOUNCE_MS);
    this.trigger = {
      place: debounce(() => this.request("place"), wait),
      publisher: debounce(() => this.request("publisher"), wait),
    };
  }

  /** Called on every keystroke; the actual request is debounced. */
  onFieldChange(field: FieldName, text: string): void {
    this.values[field] = text;
    if (this.queryItems().length === 0) {
      this.reset();
      return;
    }
    this.trigger[field]();
  }

  /** Commits a suggestion to its field and refreshes the companion list. */
  select(field: FieldName, value: string): void {
    this.values[field] = value;
    this.suggestions[field] = [];
    this.sequence[field] += 1;
    this.render();
    this.trigger[field]();
  }

  snapshot(): FormSnapshot {
    return {
      values: { ...this.values },
      suggestions: { place: [...this.suggestions.place], publisher: [...this.suggestions.publisher] },
      error: this.error,
    };
  }

  /** Resolves once every request issued so far has completed. */
  settle(): Promise<void> {
    return this.pending;
  }

  private reset(): void {
    for (const field of FIELDS) {
      this.trigger[field].cancel();
      this.suggestions[field] = [];
      this.sequence[field] += 1;
    }
    this.error = null;
    this.render();
  }

  private queryItems(): string[] {
    const items: string[] = [];
    for (const field of FIELDS) {
      const text = this.values[field].trim();
      if (text) {
        items.push(text);
      }
    }
    return items;
  }

  private request(source: FieldName): void {
    const target = COMPANION[source];
    const seq = ++this.sequence[target];
    const work = this.client
      .suggest(this.queryItems())
      .then((ranked) => {
        if (seq !== this.sequence[target]) {
          return;
        }
        this.suggestions[target] = ranked;
        this.error = null;
        this.render();
      })
      .catch((err: unknown) => {
        if (seq !== this.sequence[target]) {
          return;
        }
        this.error = err instanceof Error ? err.message : String(err);
        this.render();
      });
    this.pending = this.pending.then(() => work);
  }

  private render(): void {
    this.onRender(this.snapshot());
  }
}
