// Command panel + tables: target selection, dispatch, ack/counter display.

import type { GsClient } from "./client.js";
import type { SessionView } from "./state.js";

const ACTIONS = ["stop", "goto", "return_home", "start_experiment"];

export class CommandPanel {
  private readonly actionSelect: HTMLSelectElement;
  private readonly targetList: HTMLDivElement;
  private readonly sendButton: HTMLButtonElement;
  private readonly history: HTMLUListElement;
  private readonly counters: HTMLTableElement;
  private readonly status: HTMLDivElement;

  constructor(
    root: HTMLElement,
    private readonly client: GsClient,
  ) {
    root.innerHTML = `
      <div class="dispatch">
        <select class="action"></select>
        <div class="targets"></div>
        <button class="send" disabled>send</button>
        <div class="status"></div>
      </div>
      <h3>command history</h3>
      <ul class="history"></ul>
      <h3>counters</h3>
      <table class="counters"></table>
    `;
    this.actionSelect = root.querySelector(".action")!;
    this.targetList = root.querySelector(".targets")!;
    this.sendButton = root.querySelector(".send")!;
    this.history = root.querySelector(".history")!;
    this.counters = root.querySelector(".counters")!;
    this.status = root.querySelector(".status")!;
    for (const action of ACTIONS) {
      const opt = document.createElement("option");
      opt.value = opt.textContent = action;
      this.actionSelect.appendChild(opt);
    }
    this.sendButton.addEventListener("click", () => void this.dispatch());
  }

  private selectedTargets(): "all" | string[] {
    const boxes = [...this.targetList.querySelectorAll<HTMLInputElement>("input:checked")];
    const ids = boxes.map((b) => b.value);
    return ids.includes("all") ? "all" : ids;
  }

  private async dispatch(): Promise<void> {
    const targets = this.selectedTargets();
    this.status.textContent = "";
    try {
      await this.client.sendCommand(this.actionSelect.value, targets);
    } catch (err) {
      // surface the service's rejection reason verbatim
      this.status.textContent = String(err);
    }
  }

  render(view: SessionView): void {
    const known = new Set(
      [...this.targetList.querySelectorAll<HTMLInputElement>("input")].map((b) => b.value),
    );
    for (const id of ["all", ...[...view.vehicles.keys()].sort()]) {
      if (known.has(id)) continue;
      const label = document.createElement("label");
      const box = document.createElement("input");
      box.type = "checkbox";
      box.value = id;
      box.addEventListener("change", () => {
        this.sendButton.disabled = this.selectedTargets().length === 0;
      });
      label.append(box, ` ${id} `);
      this.targetList.appendChild(label);
    }

    this.history.replaceChildren(
      ...view.commands.map((c) => {
        const li = document.createElement("li");
        const acks = [...c.acks.entries()]
          .map(([node, a]) => `${node}:${a.status}${a.detail ? ` (${a.detail})` : ""}`)
          .join(", ");
        li.textContent = `${c.action} → [${c.targets.join(", ")}] ${acks}`;
        return li;
      }),
    );

    const rows = [...view.vehicles.values()].map((v) => {
      const cells = Object.entries(v.counters)
        .map(([k, n]) => `<td>${k}=${n}</td>`)
        .join("");
      return `<tr><th>${v.nodeId}</th><td>${v.linkState}</td>` +
        `<td>${(v.battery * 100).toFixed(0)}%</td>${cells}</tr>`;
    });
    this.counters.innerHTML = rows.join("");
  }
}
