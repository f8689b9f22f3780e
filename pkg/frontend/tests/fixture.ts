/** In-memory backend with canned candidate groups for UI tests. */

import {
  ApiError,
  type Backend,
  type GroupWire,
  type PropagateBody,
  type PropagateResponse,
  type SearchBody,
  type SearchResponse,
} from "../src/api.js";
import type { QueryBody } from "../src/chips.js";

export const CATEGORIES = ["home", "hospital", "care_home", "hospice", "other", "elsewhere"];

export const RESOLVED_QUERY: QueryBody = {
  must_all: ["mortality", "weekly"],
  must_some: [],
  must_not: ["region_1"],
  data_types: [],
  free_text: [],
};

/**
 * One valid group per region starting at region_2, scores strictly
 * descending. Wire annotations put the unmatched keyword last so tests
 * can prove the UI reorders it to the front.
 */
export function buildGroups(count: number): GroupWire[] {
  return Array.from({ length: count }, (_, i) => {
    const region = i + 2;
    const token = `region_${region}`;
    const members = CATEGORIES.map((c) => `ds-r${String(region).padStart(3, "0")}-${c}`);
    return {
      group_hash: `hash-${String(region).padStart(3, "0")}`,
      rank: i + 1,
      score: Number((0.7 - i * 0.01).toFixed(4)),
      ordered_member_ids: members,
      per_position_gamma: members.map(() => 0.52),
      validation: {
        passed: true,
        reason: null,
        checks: [
          { name: "group_mean", value: 0.6, threshold: 0, passed: true },
          { name: "stream_min", value: 0.5, threshold: 0, passed: true },
          { name: "pair_mean", value: 0.55, threshold: 0, passed: true },
          { name: "pair_min", value: 0.45, threshold: 0, passed: true },
        ],
      },
      annotations: members.map((_, j) => [
        { keyword: "mortality", status: "hidden_common" as const },
        { keyword: CATEGORIES[j] as string, status: "matched_in_order" as const },
        { keyword: token, status: "unmatched" as const },
      ]),
    };
  });
}

export class FixtureBackend implements Backend {
  groups: GroupWire[];
  resolvedQuery: QueryBody;
  searchBodies: SearchBody[] = [];
  propagateBodies: PropagateBody[] = [];
  propagated = new Set<string>();

  holdSearch = false;
  activeSearches = 0;
  maxActiveSearches = 0;
  holdPropagate = false;
  activePropagates = 0;
  maxActivePropagates = 0;
  private waiters: Array<() => void> = [];

  constructor(groups: GroupWire[] = buildGroups(19)) {
    this.groups = groups;
    this.resolvedQuery = structuredClone(RESOLVED_QUERY);
  }

  release(): void {
    const waiters = this.waiters;
    this.waiters = [];
    for (const wake of waiters) wake();
  }

  referenceQuery(): Promise<QueryBody> {
    return Promise.resolve(structuredClone(this.resolvedQuery));
  }

  async search(body: SearchBody): Promise<SearchResponse> {
    this.searchBodies.push(structuredClone(body));
    this.activeSearches += 1;
    this.maxActiveSearches = Math.max(this.maxActiveSearches, this.activeSearches);
    if (this.holdSearch) {
      await new Promise<void>((resolve) => this.waiters.push(resolve));
    }
    this.activeSearches -= 1;
    const groups = this.groups
      .filter((g) => !this.propagated.has(g.group_hash))
      .map((g, i) => ({ ...structuredClone(g), rank: i + 1 }));
    return {
      reference_page_id: body.page_id,
      query: structuredClone(this.resolvedQuery),
      count: groups.length,
      groups,
    };
  }

  async propagate(body: PropagateBody): Promise<PropagateResponse> {
    this.propagateBodies.push(structuredClone(body));
    this.activePropagates += 1;
    this.maxActivePropagates = Math.max(this.maxActivePropagates, this.activePropagates);
    if (this.holdPropagate) {
      await new Promise<void>((resolve) => this.waiters.push(resolve));
    }
    this.activePropagates -= 1;
    const group = this.groups.find((g) => g.group_hash === body.group_hash);
    if (!group) {
      throw new ApiError("not_found", `no cached group ${body.group_hash}`, 404);
    }
    if (this.propagated.has(body.group_hash)) {
      throw new ApiError("duplicate_propagation", "this group was already activated", 409);
    }
    if (!group.validation.passed) {
      throw new ApiError("validation_failed", group.validation.reason ?? "validation failed", 409);
    }
    this.propagated.add(body.group_hash);
    return {
      new_page_id: `pg-new-${this.propagated.size}`,
      source_page_id: body.page_id,
      ordered_member_ids: [...group.ordered_member_ids],
      decided_at: new Date().toISOString(),
    };
  }
}
