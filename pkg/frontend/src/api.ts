/** Client for the suggestion service's GET /suggest and GET /healthz. */

// Items are joined with the unit separator, which cannot occur inside a value.
export const ITEMS_SEPARATOR = "\x1f";

export interface Suggestion {
  value: string;
  confidence: number;
  lift: number;
}

export interface SuggestResponse {
  items: string[];
  suggestions: Suggestion[];
  elapsed_ms: number;
}

export class SuggestServiceError extends Error {
  constructor(
    message: string,
    readonly status?: number,
  ) {
    super(message);
    this.name = "SuggestServiceError";
  }
}

export class SuggestClient {
  private readonly baseUrl: string;

  constructor(
    baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  /** Ranked suggestions for the given query items, in service order. */
  async suggest(items: string[], limit = 10): Promise<Suggestion[]> {
    const query = new URLSearchParams({
      items: items.join(ITEMS_SEPARATOR),
      limit: String(limit),
    });
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}/suggest?${query}`);
    } catch (err) {
      throw new SuggestServiceError(`suggestion service unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      let detail = `HTTP ${response.status}`;
      try {
        const body = (await response.json()) as { error?: string };
        if (body.error) {
          detail = body.error;
        }
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new SuggestServiceError(detail, response.status);
    }
    const body = (await response.json()) as SuggestResponse;
    return body.suggestions;
  }

  async healthy(): Promise<boolean> {
    try {
      const response = await this.fetchFn(`${this.baseUrl}/healthz`);
      return response.ok;
    } catch {
      return false;
    }
  }
}
