/** Axis scales mapping data to pixel coordinates, plus tick placement. */

export interface Scale {
  (v: number): number;
  readonly domain: [number, number];
  readonly range: [number, number];
  readonly kind: "linear" | "log";
  ticks(): number[];
}

export function linearScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const [a, b] = domain;
  const [p, q] = range;
  const span = b - a === 0 ? 1 : b - a;
  const f = (v: number) => p + ((v - a) / span) * (q - p);
  return Object.assign(f, {
    domain,
    range,
    kind: "linear" as const,
    ticks: () => linearTicks(a, b),
  });
}

/** Log10 scale; the domain must be strictly positive. */
export function logScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const [a, b] = domain;
  if (a <= 0 || b <= 0) {
    throw new Error(`log scale needs a positive domain, got [${a}, ${b}]`);
  }
  const la = Math.log10(a);
  const lb = Math.log10(b);
  const [p, q] = range;
  const span = lb - la === 0 ? 1 : lb - la;
  const f = (v: number) => p + ((Math.log10(v) - la) / span) * (q - p);
  return Object.assign(f, {
    domain,
    range,
    kind: "log" as const,
    ticks: () => decadeTicks(a, b),
  });
}

/** Around five ticks at 1/2/5 times a power of ten, covering [a, b]. */
export function linearTicks(a: number, b: number, target = 5): number[] {
  if (!(b > a)) {
    return [a];
  }
  const rawStep = (b - a) / target;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    step = m * mag;
    if (step >= rawStep) break;
  }
  const out: number[] = [];
  const start = Math.ceil(a / step - 1e-9) * step;
  for (let v = start; v <= b + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

/** Powers of ten inside [a, b], thinned to at most eight. */
export function decadeTicks(a: number, b: number): number[] {
  const lo = Math.ceil(Math.log10(a) - 1e-9);
  const hi = Math.floor(Math.log10(b) + 1e-9);
  const exps: number[] = [];
  for (let e = lo; e <= hi; e++) exps.push(e);
  if (exps.length === 0) {
    return [a, b];
  }
  const stride = Math.ceil(exps.length / 8);
  // Number("1e-4") is exact where Math.pow(10, -4) is not
  return exps.filter((_, i) => i % stride === 0).map((e) => Number(`1e${e}`));
}

/** Compact tick label: plain decimals in a middle band, 1e-3 style outside. */
export function formatTick(v: number): string {
  if (v === 0) return "0";
  const av = Math.abs(v);
  if (av >= 1e4 || av < 1e-3) {
    const e = Math.floor(Math.log10(av));
    const m = v / Math.pow(10, e);
    const mTxt = Math.abs(m - 1) < 1e-9 ? "" : `${trim(m)}x`;
    return `${mTxt}1e${e}`;
  }
  return trim(v);
}

function trim(v: number): string {
  return parseFloat(v.toPrecision(6)).toString();
}
