/** Deterministic toy recurrent model.
 *
 * A two-layer character-level Elman network with fixed pseudo-random
 * weights stands in for an open-weight LLM: hidden states are computed by
 * a real recurrence over the prompt and the generated text, so embeddings
 * are contextual, deterministic, and layer/pooling are genuine choices.
 * Text generation is a temperature-controlled stepper over the toy chain
 * grammar; prompts outside the grammar free-run from a word readout head.
 */

import {
    applyStep,
    ChainProblem,
    parseProblem,
    valueAfter,
} from "./chain";
import { mulberry32, randomMatrix } from "./rng";

export const HIDDEN_DIM = 8;
export const NUM_LAYERS = 2;
const CHAR_VOCAB = 128;
const WEIGHTS_SEED = 0x7457_0001;
const SAMPLE_SEED = 0x5eed_0002;

// free-running vocabulary; index 0 ends generation
const WORDS = [
    "<eos>", "the", "value", "so", "we", "take", "then", "next",
    "step", "now", "compute", "and", "result", "is", "of", "carry",
];

// next-value candidates around the correct step result
const DELTAS = [0, 1, -1, 2, -2];
const DELTA_LOGITS = [1.5, 0.0, 0.0, -1.0, -1.0];

export type Pooling = "last_token" | "mean";

export interface CandidateRecord {
    text: string;
    hidden_state: number[];
    tokens_generated: number;
    finished: boolean;
    answer: string | null;
}

export interface GenerateRequest {
    prompt: string;
    num_candidates: number;
    stop: string;
    temperature: number;
    max_tokens: number;
}

interface Weights {
    embed: Float64Array; // CHAR_VOCAB x d
    w: Float64Array[]; // per layer, d x d (recurrent)
    u: Float64Array[]; // per layer, d x d (input)
    b: Float64Array[]; // per layer, d
    readout: Float64Array; // d x WORDS.length
}

function buildWeights(dim: number): Weights {
    const rng = mulberry32(WEIGHTS_SEED);
    const scale = 1 / Math.sqrt(dim);
    const w: Float64Array[] = [];
    const u: Float64Array[] = [];
    const b: Float64Array[] = [];
    const embed = randomMatrix(CHAR_VOCAB, dim, rng, 1.0);
    for (let layer = 0; layer < NUM_LAYERS; layer++) {
        w.push(randomMatrix(dim, dim, rng, scale));
        u.push(randomMatrix(dim, dim, rng, scale));
        b.push(randomMatrix(1, dim, rng, 0.1));
    }
    const readout = randomMatrix(dim, WORDS.length, rng, 1.0);
    return { embed, w, u, b, readout };
}

/** Streaming encoder: one hidden vector per layer, plus running sums so
 * mean pooling never needs the full history. */
class Encoder {
    h: Float64Array[];
    sums: Float64Array[];
    count = 0;

    constructor(private weights: Weights, private dim: number) {
        this.h = [];
        this.sums = [];
        for (let layer = 0; layer < NUM_LAYERS; layer++) {
            this.h.push(new Float64Array(dim));
            this.sums.push(new Float64Array(dim));
        }
    }

    clone(): Encoder {
        const copy = new Encoder(this.weights, this.dim);
        for (let layer = 0; layer < NUM_LAYERS; layer++) {
            copy.h[layer].set(this.h[layer]);
            copy.sums[layer].set(this.sums[layer]);
        }
        copy.count = this.count;
        return copy;
    }

    feed(text: string): void {
        const d = this.dim;
        const scratch = new Float64Array(d);
        for (let pos = 0; pos < text.length; pos++) {
            const code = text.charCodeAt(pos) % CHAR_VOCAB;
            let input = this.weights.embed.subarray(code * d, code * d + d);
            for (let layer = 0; layer < NUM_LAYERS; layer++) {
                const w = this.weights.w[layer];
                const u = this.weights.u[layer];
                const b = this.weights.b[layer];
                const h = this.h[layer];
                for (let i = 0; i < d; i++) {
                    let acc = b[i];
                    for (let j = 0; j < d; j++) {
                        acc += w[i * d + j] * h[j] + u[i * d + j] * input[j];
                    }
                    scratch[i] = Math.tanh(acc);
                }
                h.set(scratch);
                const sums = this.sums[layer];
                for (let i = 0; i < d; i++) sums[i] += h[i];
                input = h;
            }
            this.count++;
        }
    }

    pooled(layer: number, pooling: Pooling): number[] {
        if (pooling === "last_token" || this.count === 0) {
            return Array.from(this.h[layer]);
        }
        return Array.from(this.sums[layer], (s) => s / this.count);
    }

    wordLogits(layer: number): number[] {
        const d = this.dim;
        const h = this.h[layer];
        const out: number[] = [];
        for (let k = 0; k < WORDS.length; k++) {
            let acc = 0;
            for (let j = 0; j < d; j++) {
                acc += h[j] * this.weights.readout[j * WORDS.length + k];
            }
            out.push(acc);
        }
        return out;
    }
}

function softmaxSample(
    logits: number[],
    temperature: number,
    draw: () => number,
): number {
    if (temperature <= 0) {
        let best = 0;
        for (let i = 1; i < logits.length; i++) {
            if (logits[i] > logits[best]) best = i;
        }
        return best;
    }
    const max = Math.max(...logits);
    const weights = logits.map((l) => Math.exp((l - max) / temperature));
    const total = weights.reduce((a, b) => a + b, 0);
    let r = draw() * total;
    for (let i = 0; i < weights.length; i++) {
        r -= weights[i];
        if (r <= 0) return i;
    }
    return weights.length - 1;
}

function countTokens(text: string): number {
    return text.split(/\s+/).filter(Boolean).length;
}

export class ToyRecurrentModel {
    readonly hiddenDim = HIDDEN_DIM;
    private weights = buildWeights(HIDDEN_DIM);
    private sample = mulberry32(SAMPLE_SEED);

    constructor(
        private layer: number = NUM_LAYERS - 1,
        private pooling: Pooling = "last_token",
    ) {
        if (!Number.isInteger(layer) || layer < 0 || layer >= NUM_LAYERS) {
            throw new RangeError(
                `layer must be in [0, ${NUM_LAYERS - 1}], got ${layer}`,
            );
        }
    }

    /** Hidden-state embedding of a bare text, for tests and probes. */
    embed(text: string): number[] {
        const enc = new Encoder(this.weights, HIDDEN_DIM);
        enc.feed(text);
        return enc.pooled(this.layer, this.pooling);
    }

    generate(req: GenerateRequest): CandidateRecord[] {
        const base = new Encoder(this.weights, HIDDEN_DIM);
        base.feed(req.prompt);

        if (req.max_tokens === 0) {
            // embedding probe: nothing sampled, the prompt's own state
            const state = base.pooled(this.layer, this.pooling);
            const record: CandidateRecord = {
                text: "",
                hidden_state: state,
                tokens_generated: 0,
                finished: false,
                answer: null,
            };
            return Array.from({ length: req.num_candidates }, () => ({
                ...record,
                hidden_state: state.slice(),
            }));
        }

        const segments = req.stop ? req.prompt.split(req.stop) : [req.prompt];
        const problem = parseProblem(segments[0] ?? "");
        const thoughts = segments.slice(1).filter((s) => s.length > 0);

        const out: CandidateRecord[] = [];
        for (let c = 0; c < req.num_candidates; c++) {
            const raw = problem
                ? this.stepText(problem, thoughts, req.temperature)
                : this.freeRunText(base, req.temperature, req.max_tokens);
            out.push(this.finalize(base, raw, req));
        }
        return out;
    }

    /** One more chain step conditioned on the prior thoughts. */
    private stepText(
        problem: ChainProblem,
        thoughts: string[],
        temperature: number,
    ): { text: string; finished: boolean; answer: string | null } {
        const value = valueAfter(problem, thoughts);
        const taken = thoughts.length;
        if (taken >= problem.steps.length || taken >= problem.asked) {
            // steps exhausted: only the answer is left to emit
            return {
                text: `final answer ${value}`,
                finished: true,
                answer: String(value),
            };
        }
        const step = problem.steps[taken];
        const correct = applyStep(value, step);
        const pick = softmaxSample(DELTA_LOGITS, temperature, this.sample);
        const sampled = correct + DELTAS[pick];
        let text =
            `step ${taken + 1}: ${step.verb} ${step.operand} ` +
            `-> value ${sampled}`;
        if (taken + 1 >= problem.asked) {
            text += `; final answer ${sampled}`;
            return { text, finished: true, answer: String(sampled) };
        }
        return { text, finished: false, answer: null };
    }

    /** Prompt outside the grammar: free-run words from the readout head
     * until <eos>, like an untrained LM babbling in-distribution. */
    private freeRunText(
        base: Encoder,
        temperature: number,
        maxTokens: number,
    ): { text: string; finished: boolean; answer: string | null } {
        const enc = base.clone();
        const budget = Math.min(maxTokens, 16);
        const words: string[] = [];
        let finished = false;
        for (let t = 0; t < budget; t++) {
            const pick = softmaxSample(
                enc.wordLogits(this.layer), temperature, this.sample,
            );
            if (pick === 0) {
                finished = true; // end-of-sequence token
                break;
            }
            words.push(WORDS[pick]);
            enc.feed((words.length > 1 ? " " : "") + WORDS[pick]);
        }
        return { text: words.join(" "), finished, answer: null };
    }

    /** Apply stop/max_tokens limits, then embed prompt+text. */
    private finalize(
        base: Encoder,
        raw: { text: string; finished: boolean; answer: string | null },
        req: GenerateRequest,
    ): CandidateRecord {
        let { text, finished, answer } = raw;

        if (req.stop) {
            const cut = text.indexOf(req.stop);
            if (cut >= 0) {
                text = text.slice(0, cut);
                // the stop token ended generation; treat like end-of-sequence
                // so an empty cut never yields an unfinished empty candidate
                finished = text.length === 0;
                answer = null;
            }
        }

        let tokens = countTokens(text) + (finished || text ? 1 : 0);
        if (tokens > req.max_tokens) {
            const kept = text.split(/\s+/).filter(Boolean)
                .slice(0, req.max_tokens);
            text = kept.join(" ");
            tokens = req.max_tokens;
            finished = false;
            answer = null;
        }

        const enc = base.clone();
        enc.feed(text);
        return {
            text,
            hidden_state: enc.pooled(this.layer, this.pooling),
            tokens_generated: tokens,
            finished,
            answer,
        };
    }
}
