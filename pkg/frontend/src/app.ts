import { formIsValid, formatProbability } from "./state.js";
import type { Candidate, TriageClient, TriageForm } from "./types.js";

const FIELDS = [
  "headline",
  "description",
  "project",
  "product",
  "component",
] as const;

type FieldName = (typeof FIELDS)[number];

const PAGE = `
<div class="triage-layout">
  <section class="pane form-pane">
    <h2>New bug report</h2>
    <form id="triage-form" novalidate>
      <div class="field" data-field="headline">
        <label for="field-headline">Headline</label>
        <input id="field-headline" name="headline" type="text" />
        <span class="field-error" hidden></span>
      </div>
      <div class="field" data-field="description">
        <label for="field-description">Description</label>
        <textarea id="field-description" name="description" rows="6"></textarea>
        <span class="field-error" hidden></span>
      </div>
      <div class="field" data-field="project">
        <label for="field-project">Project</label>
        <input id="field-project" name="project" type="text" />
        <span class="field-error" hidden></span>
      </div>
      <div class="field" data-field="product">
        <label for="field-product">Product</label>
        <input id="field-product" name="product" type="text" />
        <span class="field-error" hidden></span>
      </div>
      <div class="field" data-field="component">
        <label for="field-component">Component</label>
        <input id="field-component" name="component" type="text" />
        <span class="field-error" hidden></span>
      </div>
      <button id="submit-check" type="submit" disabled>Check for duplicates</button>
    </form>
    <div id="retry-banner" class="banner" hidden>
      <span id="retry-text"></span>
      <button id="dismiss-banner" type="button">Dismiss</button>
    </div>
  </section>
  <section class="pane results-pane">
    <h2>Probable duplicates</h2>
    <p id="results-status">Submit a report to see candidates.</p>
    <p id="empty-state" hidden>No likely duplicates.</p>
    <ul id="candidates"></ul>
    <button id="file-new" type="button" hidden>File as new bug</button>
    <div id="confirmation" hidden>
      <h3>Recorded</h3>
      <p>
        Stored bug <strong id="stored-id"></strong> with status
        <strong id="stored-status"></strong><span id="stored-target"></span>.
      </p>
    </div>
    <p id="recheck-prompt" hidden>
      That check has expired. Please run the check again.
    </p>
    <div id="toast" hidden></div>
  </section>
</div>
`;

export class TriageApp {
  private requestId: string | null = null;
  private checkPending = false;
  private decisionPending = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: TriageClient,
  ) {
    root.innerHTML = PAGE;
    this.form().addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitCheck();
    });
    for (const name of FIELDS) {
      this.input(name).addEventListener("input", () => this.refreshSubmit());
    }
    this.el("#file-new").addEventListener("click", () => {
      void this.decide("create_new");
    });
    this.el("#dismiss-banner").addEventListener("click", () => {
      this.el("#retry-banner").hidden = true;
    });
    this.refreshSubmit();
  }

  // --- element accessors ---------------------------------------------------

  private el<T extends HTMLElement = HTMLElement>(selector: string): T {
    const node = this.root.querySelector<T>(selector);
    if (!node) throw new Error(`missing element ${selector}`);
    return node;
  }

  private form(): HTMLFormElement {
    return this.el<HTMLFormElement>("#triage-form");
  }

  private input(name: FieldName): HTMLInputElement | HTMLTextAreaElement {
    return this.el<HTMLInputElement>(`#field-${name}`);
  }

  readForm(): TriageForm {
    return {
      headline: this.input("headline").value,
      description: this.input("description").value,
      project: this.input("project").value,
      product: this.input("product").value,
      component: this.input("component").value,
    };
  }

  // --- form state ------------------------------------------------------------

  private refreshSubmit(): void {
    const submit = this.el<HTMLButtonElement>("#submit-check");
    submit.disabled = this.checkPending || !formIsValid(this.readForm());
  }

  private clearFieldErrors(): void {
    for (const span of this.root.querySelectorAll<HTMLElement>(".field-error")) {
      span.hidden = true;
      span.textContent = "";
    }
  }

  private showFieldErrors(fields: string[]): void {
    for (const name of fields) {
      const holder = this.root.querySelector<HTMLElement>(
        `.field[data-field="${name}"] .field-error`,
      );
      if (holder) {
        holder.textContent = `${name} is required`;
        holder.hidden = false;
      }
    }
  }

  private showBanner(text: string): void {
    this.el("#retry-text").textContent = text;
    this.el("#retry-banner").hidden = false;
  }

  private showToast(text: string): void {
    const toast = this.el("#toast");
    toast.textContent = text;
    toast.hidden = false;
  }

  // --- check flow ------------------------------------------------------------

  async submitCheck(): Promise<void> {
    if (this.checkPending || !formIsValid(this.readForm())) return;
    this.checkPending = true;
    this.refreshSubmit();
    this.clearFieldErrors();
    this.el("#retry-banner").hidden = true;
    this.el("#toast").hidden = true;
    this.el("#recheck-prompt").hidden = true;
    this.el("#confirmation").hidden = true;
    this.el("#results-status").textContent = "Checking…";
    try {
      const result = await this.client.check(this.readForm());
      if (result.ok) {
        this.requestId = result.value.request_id;
        this.renderCandidates(result.value.candidates);
      } else if (result.error.status === 400) {
        this.el("#results-status").textContent =
          "Fix the highlighted fields and retry.";
        this.showFieldErrors(result.error.fields ?? []);
      } else {
        // unreachable server or 5xx: keep the form contents untouched
        this.el("#results-status").textContent = "Check failed.";
        this.showBanner(
          `The duplicate check is unavailable (${result.error.detail}). ` +
            "Your report text is preserved; retry in a moment.",
        );
      }
    } finally {
      this.checkPending = false;
      this.refreshSubmit();
    }
  }

  private renderCandidates(candidates: Candidate[]): void {
    const list = this.el("#candidates");
    list.innerHTML = "";
    this.el("#results-status").textContent = candidates.length
      ? `${candidates.length} candidate(s), most likely first.`
      : "";
    this.el("#empty-state").hidden = candidates.length > 0;
    this.el<HTMLButtonElement>("#file-new").hidden = false;
    for (const candidate of candidates) {
      const row = document.createElement("li");
      row.className = "candidate-row";
      row.dataset.bugId = candidate.bug_id;
      // the raw server value, untouched, for anything that needs exactness
      row.dataset.probability = String(candidate.probability);
      const percent = formatProbability(candidate.probability);
      row.innerHTML = `
        <div class="prob-cell">
          <div class="prob-bar-track">
            <div class="prob-bar" style="width: ${(candidate.probability * 100).toFixed(2)}%"></div>
          </div>
          <span class="prob-text">${percent}</span>
        </div>
        <span class="bug-id"></span>
        <span class="bug-headline"></span>
        <button type="button" class="mark-duplicate">Mark duplicate</button>
      `;
      row.querySelector<HTMLElement>(".bug-id")!.textContent = candidate.bug_id;
      row.querySelector<HTMLElement>(".bug-headline")!.textContent =
        candidate.headline;
      row
        .querySelector<HTMLButtonElement>(".mark-duplicate")!
        .addEventListener("click", () => {
          this.selectRow(row);
          void this.decide("duplicate_of", candidate.bug_id);
        });
      list.appendChild(row);
    }
  }

  private selectRow(row: HTMLElement): void {
    for (const other of this.root.querySelectorAll(".candidate-row.selected")) {
      other.classList.remove("selected");
    }
    row.classList.add("selected");
  }

  // --- decision flow -----------------------------------------------------------

  async decide(action: "create_new" | "duplicate_of", targetId?: string): Promise<void> {
    if (this.decisionPending || this.requestId === null) return;
    this.decisionPending = true;
    this.el("#toast").hidden = true;
    try {
      const decision =
        action === "create_new"
          ? { request_id: this.requestId, action }
          : { request_id: this.requestId, action, target_id: targetId! };
      const result = await this.client.decide(decision);
      if (result.ok) {
        this.requestId = null;
        this.el("#candidates").innerHTML = "";
        this.el("#empty-state").hidden = true;
        this.el<HTMLButtonElement>("#file-new").hidden = true;
        this.el("#results-status").textContent = "";
        this.el("#stored-id").textContent = result.value.id;
        this.el("#stored-status").textContent = result.value.status;
        this.el("#stored-target").textContent = result.value.duplicate_of
          ? ` of ${result.value.duplicate_of}`
          : "";
        this.el("#confirmation").hidden = false;
      } else if (result.error.status === 404) {
        // expired request: nothing was stored, the check must be re-run
        this.requestId = null;
        this.el("#candidates").innerHTML = "";
        this.el<HTMLButtonElement>("#file-new").hidden = true;
        this.el("#recheck-prompt").hidden = false;
      } else if (result.error.status === 422) {
        this.showToast(
          targetId
            ? `Could not mark duplicate of ${targetId}: ${result.error.detail}`
            : `Decision rejected: ${result.error.detail}`,
        );
      } else {
        this.showBanner(
          `Recording the decision failed (${result.error.detail}); retry in a moment.`,
        );
      }
    } finally {
      this.decisionPending = false;
      for (const row of this.root.querySelectorAll(".candidate-row.selected")) {
        row.classList.remove("selected");
      }
    }
  }
}

export function createTriageApp(root: HTMLElement, client: TriageClient): TriageApp {
  return new TriageApp(root, client);
}
