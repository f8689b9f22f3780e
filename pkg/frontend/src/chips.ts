/** Keyword chip state and the fold from chips to a query body. */

export type ChipCategory = "none" | "must_all" | "must_some" | "must_not";

export type ChipOrigin = "reference" | "manual";

export interface KeywordChipState {
  keyword: string;
  category: ChipCategory;
  origin: ChipOrigin;
}

export interface QueryBody {
  must_all: string[];
  must_some: string[];
  must_not: string[];
  data_types: string[];
  free_text: string[];
}

const CYCLE: readonly ChipCategory[] = ["none", "must_all", "must_some", "must_not"];

/** Next category in the fixed click cycle none -> must_all -> must_some -> must_not -> none. */
export function nextCategory(category: ChipCategory): ChipCategory {
  const at = CYCLE.indexOf(category);
  return CYCLE[(at + 1) % CYCLE.length] as ChipCategory;
}

export function cycleChip(chip: KeywordChipState): KeywordChipState {
  return { ...chip, category: nextCategory(chip.category) };
}

/** CSS class for a keyword chip in a given category. */
export const CHIP_CLASS: Record<ChipCategory, string> = {
  none: "chip-none",
  must_all: "chip-must-all",
  must_some: "chip-must-some",
  must_not: "chip-must-not",
};

/**
 * Fold chip states into the query body sent to the search endpoint.
 *
 * Chips in the none category contribute nothing. Clause lists are sorted
 * so the body is a pure function of the chip set, not of click order.
 */
export function foldChips(
  chips: readonly KeywordChipState[],
  dataTypes: readonly string[] = [],
  freeText: readonly string[] = [],
): QueryBody {
  const clause = (category: ChipCategory): string[] =>
    chips
      .filter((chip) => chip.category === category)
      .map((chip) => chip.keyword)
      .sort();
  return {
    must_all: clause("must_all"),
    must_some: clause("must_some"),
    must_not: clause("must_not"),
    data_types: [...dataTypes].sort(),
    free_text: [...freeText],
  };
}

/**
 * Rebuild chip states from a query body.
 *
 * The inverse of foldChips for every chip that is not in the none
 * category; none chips carry no information and cannot come back.
 */
export function chipsFromQuery(query: QueryBody, origin: ChipOrigin = "manual"): KeywordChipState[] {
  const chips: KeywordChipState[] = [];
  const take = (keywords: readonly string[], category: ChipCategory) => {
    for (const keyword of keywords) {
      chips.push({ keyword, category, origin });
    }
  };
  take(query.must_all, "must_all");
  take(query.must_some, "must_some");
  take(query.must_not, "must_not");
  chips.sort((a, b) => (a.keyword < b.keyword ? -1 : a.keyword > b.keyword ? 1 : 0));
  return chips;
}
