/**
 * DOM layer: renders the wizard state into index.html and wires controls
 * to the controller. All palette colors shown come straight from state.
 */

import { HttpGatewayApi } from "./api.js";
import { WizardController, WizardState } from "./wizard.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export function mountWizard(): WizardController {
  const controller = new WizardController(new HttpGatewayApi());

  const textInput = el<HTMLTextAreaElement>("text-input");
  const categorySelect = el<HTMLSelectElement>("category-select");
  const imageInput = el<HTMLInputElement>("image-input");
  const imagePreview = el<HTMLImageElement>("image-preview");
  const submitButton = el<HTMLButtonElement>("submit-button");
  const swatchRow = el<HTMLDivElement>("swatch-row");
  const revertButton = el<HTMLButtonElement>("revert-button");
  const colorizeButton = el<HTMLButtonElement>("colorize-button");
  const resultImage = el<HTMLImageElement>("result-image");
  const originalImage = el<HTMLImageElement>("original-image");
  const downloadLink = el<HTMLAnchorElement>("download-link");
  const backButton = el<HTMLButtonElement>("back-button");
  const restartButton = el<HTMLButtonElement>("restart-button");
  const banner = el<HTMLDivElement>("banner");

  textInput.addEventListener("input", () => controller.setText(textInput.value));
  categorySelect.addEventListener("change", () => controller.setCategory(categorySelect.value));
  imageInput.addEventListener("change", () => {
    const file = imageInput.files?.[0] ?? null;
    controller.setImage(file);
    if (file) imagePreview.src = URL.createObjectURL(file);
  });
  submitButton.addEventListener("click", () => void controller.submitInput());
  revertButton.addEventListener("click", () => void controller.revertPalette());
  colorizeButton.addEventListener("click", () => void controller.runColorize());
  backButton.addEventListener("click", () => controller.backToPalette());
  restartButton.addEventListener("click", () => controller.startOver());

  function renderSwatches(state: WizardState): void {
    swatchRow.replaceChildren();
    (state.palette ?? []).forEach((hex, index) => {
      const wrap = document.createElement("div");
      wrap.className = "swatch";
      const picker = document.createElement("input");
      picker.type = "color";
      picker.value = hex;
      // committing on close = one feedback record per deliberate edit
      picker.addEventListener("change", () =>
        void controller.commitSwatchEdit(index, picker.value)
      );
      const label = document.createElement("span");
      label.textContent = hex;
      wrap.append(picker, label);
      swatchRow.append(wrap);
    });
  }

  controller.subscribe((state) => {
    for (const step of ["input", "palette", "result"] as const) {
      el(`step-${step}`).hidden = state.step !== step;
    }
    if (categorySelect.options.length !== state.categories.length + 1) {
      categorySelect.replaceChildren(new Option("choose a category", "", true, false));
      categorySelect.options[0].disabled = true;
      for (const name of state.categories) categorySelect.add(new Option(name, name));
    }
    submitButton.disabled = !controller.canSubmit;
    colorizeButton.disabled = !controller.canColorize;
    renderSwatches(state);
    if (state.resultImage) {
      const url = URL.createObjectURL(state.resultImage);
      resultImage.src = url;
      downloadLink.href = url;
      downloadLink.download = "colorized.png";
      if (state.image) originalImage.src = URL.createObjectURL(state.image);
    }
    banner.hidden = state.banner === null;
    if (state.banner) {
      banner.textContent = state.banner.message + (state.banner.retryable ? " (retry available)" : "");
      banner.className = `banner ${state.banner.kind}`;
    }
  });

  void controller.loadCategories();
  return controller;
}

declare global {
  interface Window {
    culturecolorWizard?: WizardController;
  }
}

if (typeof document !== "undefined" && document.getElementById("step-input")) {
  window.culturecolorWizard = mountWizard();
}
