/**
 * Framework-free state machine for the three-step wizard:
 * input -> palette -> result.
 *
 * Forward navigation is guarded; the palette always holds exactly five
 * swatches, every displayed color comes from the server or an explicit
 * user edit, and each committed edit posts one adjustment to the gateway.
 */

import { ApiError, GatewayApi } from "./api.js";

export type Step = "input" | "palette" | "result";

export interface Banner {
  kind: "error" | "warning";
  message: string;
  field?: string;
  retryable: boolean;
}

export interface WizardState {
  step: Step;
  categories: string[];
  text: string;
  category: string | null;
  image: Blob | null;
  sessionId: string | null;
  generatedPalette: string[] | null;
  palette: string[] | null;
  adjustPending: boolean;
  resultImage: Blob | null;
  busy: boolean;
  banner: Banner | null;
}

type Listener = (state: WizardState) => void;

const PALETTE_SIZE = 5;
const HEX_RE = /^#[0-9A-Fa-f]{6}$/;

export class WizardController {
  private state: WizardState = {
    step: "input",
    categories: [],
    text: "",
    category: null,
    image: null,
    sessionId: null,
    generatedPalette: null,
    palette: null,
    adjustPending: false,
    resultImage: null,
    busy: false,
    banner: null,
  };
  private listeners: Listener[] = [];

  constructor(private api: GatewayApi) {}

  getState(): WizardState {
    return { ...this.state };
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private update(patch: Partial<WizardState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.getState());
  }

  private bannerFor(err: unknown): Banner {
    if (err instanceof ApiError) {
      return { kind: "error", message: err.message, field: err.field, retryable: err.retryable };
    }
    return { kind: "error", message: String(err), retryable: true };
  }

  async loadCategories(): Promise<void> {
    try {
      this.update({ categories: await this.api.categories(), banner: null });
    } catch (err) {
      this.update({ banner: this.bannerFor(err) });
    }
  }

  setText(text: string): void {
    this.update({ text });
  }

  setCategory(category: string): void {
    this.update({ category });
  }

  setImage(image: Blob | null): void {
    this.update({ image });
  }

  /** Step 1 is submittable only once every input validates. */
  get canSubmit(): boolean {
    return (
      this.state.step === "input" &&
      !this.state.busy &&
      this.state.text.trim().length > 0 &&
      this.state.category !== null &&
      this.state.image !== null
    );
  }

  async submitInput(seed?: number): Promise<void> {
    if (!this.canSubmit) {
      throw new Error("step 1 inputs incomplete");
    }
    this.update({ busy: true, banner: null });
    try {
      const res = await this.api.generatePalette({
        text: this.state.text,
        category: this.state.category!,
        image: this.state.image!,
        seed,
      });
      this.update({
        step: "palette",
        sessionId: res.session_id,
        generatedPalette: [...res.palette],
        palette: [...res.palette],
        adjustPending: false,
        resultImage: null,
        busy: false,
      });
    } catch (err) {
      this.update({ busy: false, banner: this.bannerFor(err) });
    }
  }

  /**
   * Commit one swatch edit: optimistic local update plus a single adjust
   * call carrying the full five-color palette. A failed post keeps the
   * edit locally (with a warning) and is retried by the next commit.
   */
  async commitSwatchEdit(index: number, color: string): Promise<void> {
    if (this.state.step !== "palette" || !this.state.palette || !this.state.sessionId) {
      throw new Error("no palette to edit");
    }
    if (index < 0 || index >= PALETTE_SIZE) {
      throw new Error(`swatch index ${index} out of range`);
    }
    if (!HEX_RE.test(color)) {
      throw new Error(`not a #RRGGBB color: ${color}`);
    }
    const palette = [...this.state.palette];
    palette[index] = color.toUpperCase();
    this.update({ palette });
    await this.pushAdjustment();
  }

  /** Restore the server-generated palette (recorded like any other edit). */
  async revertPalette(): Promise<void> {
    if (this.state.step !== "palette" || !this.state.generatedPalette) {
      throw new Error("nothing to revert");
    }
    this.update({ palette: [...this.state.generatedPalette] });
    await this.pushAdjustment();
  }

  private async pushAdjustment(): Promise<void> {
    try {
      await this.api.adjustPalette(this.state.sessionId!, this.state.palette!);
      this.update({ adjustPending: false, banner: null });
    } catch (err) {
      this.update({
        adjustPending: true,
        banner: {
          kind: "warning",
          message: `adjustment kept locally, will retry: ${
            err instanceof Error ? err.message : err
          }`,
          retryable: true,
        },
      });
    }
  }

  get canColorize(): boolean {
    return this.state.step === "palette" && this.state.sessionId !== null && !this.state.busy;
  }

  async runColorize(seed?: number): Promise<void> {
    if (!this.canColorize) {
      throw new Error("colorize requires a generated palette");
    }
    if (this.state.adjustPending) {
      await this.pushAdjustment(); // flush the retained edit first
    }
    this.update({ busy: true, banner: null });
    try {
      const blob = await this.api.colorize(this.state.sessionId!, seed);
      this.update({ step: "result", resultImage: blob, busy: false });
    } catch (err) {
      this.update({ busy: false, banner: this.bannerFor(err) });
    }
  }

  /** The exact bytes the server returned, for the download control. */
  get downloadBlob(): Blob | null {
    return this.state.resultImage;
  }

  backToPalette(): void {
    if (this.state.step === "result") {
      this.update({ step: "palette", resultImage: null });
    }
  }

  startOver(): void {
    this.update({
      step: "input",
      sessionId: null,
      generatedPalette: null,
      palette: null,
      adjustPending: false,
      resultImage: null,
      banner: null,
    });
  }
}
