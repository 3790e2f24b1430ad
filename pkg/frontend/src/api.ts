/**
 * Typed client for the culturecolor /v1 gateway. Every server interaction
 * in the app goes through this module.
 */

export interface PaletteResponse {
  palette: string[];
  session_id: string;
  model_version: string;
}

export class ApiError extends Error {
  status: number;
  field?: string;

  constructor(status: number, message: string, field?: string) {
    super(message);
    this.status = status;
    this.field = field;
  }

  get retryable(): boolean {
    return this.status === 503 || this.status >= 500;
  }
}

export interface GatewayApi {
  categories(): Promise<string[]>;
  generatePalette(input: {
    text: string;
    category: string;
    image: Blob;
    seed?: number;
  }): Promise<PaletteResponse>;
  adjustPalette(sessionId: string, palette: string[]): Promise<void>;
  colorize(sessionId: string, seed?: number): Promise<Blob>;
}

async function raiseForStatus(res: Response): Promise<never> {
  let message = res.statusText;
  let field: string | undefined;
  try {
    const body = await res.json();
    const detail = body?.detail;
    if (typeof detail === "string") message = detail;
    else if (detail && typeof detail === "object") {
      message = detail.message ?? message;
      field = detail.field;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(res.status, message, field);
}

export class HttpGatewayApi implements GatewayApi {
  constructor(private baseUrl: string = "") {}

  async categories(): Promise<string[]> {
    const res = await fetch(`${this.baseUrl}/v1/categories`);
    if (!res.ok) await raiseForStatus(res);
    return res.json();
  }

  async generatePalette(input: {
    text: string;
    category: string;
    image: Blob;
    seed?: number;
  }): Promise<PaletteResponse> {
    const form = new FormData();
    form.append("text", input.text);
    form.append("category", input.category);
    form.append("image", input.image, "upload.png");
    if (input.seed !== undefined) form.append("seed", String(input.seed));
    const res = await fetch(`${this.baseUrl}/v1/palette`, { method: "POST", body: form });
    if (!res.ok) await raiseForStatus(res);
    return res.json();
  }

  async adjustPalette(sessionId: string, palette: string[]): Promise<void> {
    const res = await fetch(`${this.baseUrl}/v1/palette/adjust`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ session_id: sessionId, palette }),
    });
    if (!res.ok) await raiseForStatus(res);
  }

  async colorize(sessionId: string, seed?: number): Promise<Blob> {
    const form = new FormData();
    form.append("session_id", sessionId);
    if (seed !== undefined) form.append("seed", String(seed));
    const res = await fetch(`${this.baseUrl}/v1/colorize`, { method: "POST", body: form });
    if (!res.ok) await raiseForStatus(res);
    return res.blob();
  }
}
