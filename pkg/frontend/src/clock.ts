/** Monotonic client clock: milliseconds since console start, never
 * decreasing even if performance.now jitters across contexts. */

const t0 = performance.now();
let last = 0;

export function nowMs(): number {
  const t = Math.floor(performance.now() - t0);
  if (t > last) last = t;
  return last;
}
