/** Display formatting. Rounding here is cosmetic; values stay server-side. */

/** Dollars per year as millions, e.g. 2310000 -> "2.310". */
export function musd(usdPerYr: number): string {
  const m = usdPerYr / 1e6;
  const text = m.toFixed(3);
  return text === "-0.000" ? "0.000" : text;
}

export function km(v: number): string {
  return v.toFixed(1);
}

export function km2(v: number): string {
  return v.toFixed(2);
}

export function mw(v: number): string {
  return v.toFixed(1);
}

/** Signed delta in millions, "+" for losses avoided being rare enough. */
export function musdDelta(usdPerYr: number): string {
  const text = musd(usdPerYr);
  return usdPerYr > 0 && !text.startsWith("-") ? `+${text}` : text;
}

const escapes: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
};

export function escapeHtml(text: string): string {
  return text.replace(/[&<>"]/g, (ch) => escapes[ch] ?? ch);
}
