/**
 * Exact rational values as received from the service ("num/den" strings).
 * The UI never invents numbers: values render verbatim as fractions, with an
 * optional decimal rendering that is always labelled approximate.
 */

export interface Rational {
  num: bigint;
  den: bigint;
}

export function parseRational(text: string): Rational {
  const m = /^(-?\d+)(?:\/(\d+))?$/.exec(text.trim());
  if (!m) throw new Error(`not a rational: ${text}`);
  const num = BigInt(m[1]);
  const den = m[2] === undefined ? 1n : BigInt(m[2]);
  if (den === 0n) throw new Error(`zero denominator: ${text}`);
  return { num, den };
}

function gcd(a: bigint, b: bigint): bigint {
  a = a < 0n ? -a : a;
  while (b !== 0n) [a, b] = [b, a % b];
  return a;
}

export function formatExact(r: Rational): string {
  const g = gcd(r.num, r.den) || 1n;
  const num = r.num / g;
  const den = r.den / g;
  return den === 1n ? num.toString() : `${num}/${den}`;
}

/** Decimal rendering for tooltips; callers must label it approximate. */
export function formatApprox(r: Rational, digits = 3): string {
  const scale = 10n ** BigInt(digits);
  const scaled = (r.num * scale) / r.den;
  const intPart = scaled / scale;
  let frac = (scaled % scale).toString().replace("-", "").padStart(digits, "0");
  frac = frac.replace(/0+$/, "");
  const sign = r.num < 0n && intPart === 0n ? "-" : "";
  return frac ? `${sign}${intPart}.${frac}` : `${sign}${intPart}`;
}

export function displayRational(text: string): string {
  return formatExact(parseRational(text));
}
