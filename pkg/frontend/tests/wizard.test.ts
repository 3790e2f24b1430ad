/**
 * End-to-end wizard flow against a stubbed gateway: input -> palette ->
 * edit -> colorize -> download, plus navigation guards and failure modes.
 */

import { beforeEach, describe, expect, it } from "vitest";

import { ApiError, GatewayApi, PaletteResponse } from "../src/api.js";
import { WizardController } from "../src/wizard.js";

const GENERATED = ["#AA0000", "#00BB00", "#0000CC", "#DDDD00", "#EE00EE"];
const PNG_BYTES = new Uint8Array([0x89, 0x50, 0x4e, 0x47, 1, 2, 3]);

class StubGateway implements GatewayApi {
  categoriesCalls = 0;
  paletteCalls: Array<{ text: string; category: string; seed?: number }> = [];
  adjustCalls: Array<{ sessionId: string; palette: string[] }> = [];
  colorizeCalls: Array<{ sessionId: string; seed?: number }> = [];
  failNextAdjust = false;
  paletteError: ApiError | null = null;

  async categories(): Promise<string[]> {
    this.categoriesCalls += 1;
    return ["punk", "hiphop", "techno"];
  }

  async generatePalette(input: {
    text: string;
    category: string;
    image: Blob;
    seed?: number;
  }): Promise<PaletteResponse> {
    if (this.paletteError) throw this.paletteError;
    this.paletteCalls.push({ text: input.text, category: input.category, seed: input.seed });
    return { palette: [...GENERATED], session_id: "session-1", model_version: "abc123" };
  }

  async adjustPalette(sessionId: string, palette: string[]): Promise<void> {
    if (this.failNextAdjust) {
      this.failNextAdjust = false;
      throw new ApiError(500, "boom");
    }
    this.adjustCalls.push({ sessionId, palette: [...palette] });
  }

  async colorize(sessionId: string, seed?: number): Promise<Blob> {
    this.colorizeCalls.push({ sessionId, seed });
    return new Blob([PNG_BYTES], { type: "image/png" });
  }
}

function image(): Blob {
  return new Blob([new Uint8Array([1, 2, 3])], { type: "image/png" });
}

async function toStepPalette(wizard: WizardController, api: StubGateway): Promise<void> {
  await wizard.loadCategories();
  wizard.setText("dark neon");
  wizard.setCategory("punk");
  wizard.setImage(image());
  await wizard.submitInput(7);
}

describe("wizard flow", () => {
  let api: StubGateway;
  let wizard: WizardController;

  beforeEach(() => {
    api = new StubGateway();
    wizard = new WizardController(api);
  });

  it("completes input -> palette -> edit -> colorize -> download", async () => {
    await toStepPalette(wizard, api);
    expect(wizard.getState().step).toBe("palette");
    expect(wizard.getState().palette).toEqual(GENERATED);
    expect(api.paletteCalls).toEqual([{ text: "dark neon", category: "punk", seed: 7 }]);

    await wizard.commitSwatchEdit(2, "#123456");
    expect(api.adjustCalls).toHaveLength(1);
    expect(api.adjustCalls[0].palette[2]).toBe("#123456");
    expect(api.adjustCalls[0].palette).toHaveLength(5);

    await wizard.runColorize(3);
    expect(wizard.getState().step).toBe("result");
    expect(api.colorizeCalls).toEqual([{ sessionId: "session-1", seed: 3 }]);

    const blob = wizard.downloadBlob!;
    const bytes = new Uint8Array(await blob.arrayBuffer());
    expect(Array.from(bytes)).toEqual(Array.from(PNG_BYTES));
  });

  it("guards forward navigation until step 1 validates", async () => {
    await wizard.loadCategories();
    expect(wizard.canSubmit).toBe(false);
    wizard.setText("x");
    expect(wizard.canSubmit).toBe(false);
    wizard.setCategory("punk");
    expect(wizard.canSubmit).toBe(false);
    wizard.setImage(image());
    expect(wizard.canSubmit).toBe(true);
    await expect(new WizardController(api).submitInput()).rejects.toThrow("incomplete");
  });

  it("refuses to colorize before a palette exists", async () => {
    expect(wizard.canColorize).toBe(false);
    await expect(wizard.runColorize()).rejects.toThrow("requires a generated palette");
    expect(api.colorizeCalls).toHaveLength(0);
  });

  it("posts one adjustment per committed edit", async () => {
    await toStepPalette(wizard, api);
    await wizard.commitSwatchEdit(0, "#111111");
    await wizard.commitSwatchEdit(4, "#222222");
    expect(api.adjustCalls).toHaveLength(2);
    expect(api.adjustCalls[1].palette).toEqual(["#111111", ...GENERATED.slice(1, 4), "#222222"]);
  });

  it("revert restores the generated palette and records it", async () => {
    await toStepPalette(wizard, api);
    await wizard.commitSwatchEdit(1, "#999999");
    await wizard.revertPalette();
    expect(wizard.getState().palette).toEqual(GENERATED);
    expect(api.adjustCalls).toHaveLength(2);
    expect(api.adjustCalls[1].palette).toEqual(GENERATED);
  });

  it("keeps a failed edit locally and retries on the next commit", async () => {
    await toStepPalette(wizard, api);
    api.failNextAdjust = true;
    await wizard.commitSwatchEdit(0, "#ABCDEF");
    expect(wizard.getState().palette![0]).toBe("#ABCDEF");
    expect(wizard.getState().adjustPending).toBe(true);
    expect(wizard.getState().banner?.kind).toBe("warning");
    expect(api.adjustCalls).toHaveLength(0);

    await wizard.commitSwatchEdit(1, "#FEDCBA");
    expect(api.adjustCalls).toHaveLength(1);
    expect(api.adjustCalls[0].palette.slice(0, 2)).toEqual(["#ABCDEF", "#FEDCBA"]);
    expect(wizard.getState().adjustPending).toBe(false);
  });

  it("flushes a retained edit before colorizing", async () => {
    await toStepPalette(wizard, api);
    api.failNextAdjust = true;
    await wizard.commitSwatchEdit(0, "#ABCDEF");
    await wizard.runColorize();
    expect(api.adjustCalls).toHaveLength(1);
    expect(api.colorizeCalls).toHaveLength(1);
  });

  it("shows a retryable banner on gateway 503", async () => {
    api.paletteError = new ApiError(503, "no palette model loaded");
    await wizard.loadCategories();
    wizard.setText("t");
    wizard.setCategory("punk");
    wizard.setImage(image());
    await wizard.submitInput();
    const state = wizard.getState();
    expect(state.step).toBe("input");
    expect(state.banner?.retryable).toBe(true);
  });

  it("surfaces field-level 400s", async () => {
    api.paletteError = new ApiError(400, "unknown category 'polka'", "category");
    await toStepPalette(wizard, api);
    expect(wizard.getState().banner?.field).toBe("category");
    expect(wizard.getState().step).toBe("input");
  });

  it("validates swatch edits", async () => {
    await toStepPalette(wizard, api);
    await expect(wizard.commitSwatchEdit(9, "#000000")).rejects.toThrow("out of range");
    await expect(wizard.commitSwatchEdit(0, "red")).rejects.toThrow("#RRGGBB");
    expect(api.adjustCalls).toHaveLength(0);
  });

  it("palette always has exactly five swatches", async () => {
    await toStepPalette(wizard, api);
    await wizard.commitSwatchEdit(3, "#010203");
    expect(wizard.getState().palette).toHaveLength(5);
    expect(wizard.getState().generatedPalette).toHaveLength(5);
  });

  it("back and start-over navigation", async () => {
    await toStepPalette(wizard, api);
    await wizard.runColorize();
    wizard.backToPalette();
    expect(wizard.getState().step).toBe("palette");
    wizard.startOver();
    const state = wizard.getState();
    expect(state.step).toBe("input");
    expect(state.sessionId).toBeNull();
    expect(state.palette).toBeNull();
  });

  it("uppercases committed hex values for the wire", async () => {
    await toStepPalette(wizard, api);
    await wizard.commitSwatchEdit(0, "#a1b2c3");
    expect(api.adjustCalls[0].palette[0]).toBe("#A1B2C3");
  });
});
