/** Small deterministic PRNG so the model's weights and sampling are
 * reproducible without any native dependency.  Mulberry32: 32-bit state,
 * uniform floats in [0, 1). */
export function mulberry32(seed: number): () => number {
    let a = seed >>> 0;
    return () => {
        a = (a + 0x6d2b79f5) >>> 0;
        let t = a;
        t = Math.imul(t ^ (t >>> 15), t | 1);
        t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
        return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
    };
}

/** rows*cols matrix of uniform values in (-scale, scale), row-major. */
export function randomMatrix(
    rows: number,
    cols: number,
    rng: () => number,
    scale: number,
): Float64Array {
    const out = new Float64Array(rows * cols);
    for (let i = 0; i < out.length; i++) {
        out[i] = (rng() * 2 - 1) * scale;
    }
    return out;
}
