/** Grammar of the toy task family the model reasons over.
 *
 * Problems read "Start with 4; step 1: add 3; step 2: multiply by 2; What
 * is the value after step 2?" and thoughts read "step 1: add 3 -> value 7",
 * the last one carrying "; final answer N".  Anything that does not parse
 * falls back to free-running generation (see model.ts).
 */

export type Verb = "add" | "subtract" | "multiply by" | "divide by";

export interface Step {
    verb: Verb;
    operand: number;
}

export interface ChainProblem {
    start: number;
    steps: Step[];
    /** Step index (1-based) the question asks about; defaults to the last. */
    asked: number;
}

const START_RE = /start with\s+(-?\d+(?:\.\d+)?)/i;
const STEP_RE = /step\s+(\d+)\s*:\s*(add|subtract|multiply by|divide by)\s+(-?\d+(?:\.\d+)?)/gi;
const ASKED_RE = /after step\s+(\d+)/i;
// greedy prefix so the LAST "-> value" wins, e.g. past a "; final answer" tail
const THOUGHT_RE = /step\s+(\d+)\s*:.*->\s*value\s+(-?\d+(?:\.\d+)?)/i;

export function parseProblem(text: string): ChainProblem | null {
    const start = START_RE.exec(text);
    if (!start) return null;
    const steps: Step[] = [];
    STEP_RE.lastIndex = 0;
    for (let m = STEP_RE.exec(text); m; m = STEP_RE.exec(text)) {
        steps.push({ verb: m[2].toLowerCase() as Verb, operand: Number(m[3]) });
    }
    if (steps.length === 0) return null;
    const asked = ASKED_RE.exec(text);
    return {
        start: Number(start[1]),
        steps,
        asked: asked ? Number(asked[1]) : steps.length,
    };
}

/** Parse one prior thought line; null when it is not step-shaped. */
export function parseThought(
    text: string,
): { index: number; value: number } | null {
    const m = THOUGHT_RE.exec(text);
    if (!m) return null;
    return { index: Number(m[1]), value: Number(m[2]) };
}

export function applyStep(value: number, step: Step): number {
    switch (step.verb) {
        case "add":
            return value + step.operand;
        case "subtract":
            return value - step.operand;
        case "multiply by":
            return value * step.operand;
        case "divide by":
            return value / step.operand;
    }
}

/** Value after the prior thoughts, trusting whatever value each thought
 * claims (a wrong earlier step stays wrong downstream, like a real model
 * conditioning on its own context). */
export function valueAfter(problem: ChainProblem, thoughts: string[]): number {
    let value = problem.start;
    for (let i = 0; i < thoughts.length; i++) {
        const parsed = parseThought(thoughts[i]);
        if (parsed) {
            value = parsed.value;
        } else if (i < problem.steps.length) {
            value = applyStep(value, problem.steps[i]);
        }
    }
    return value;
}
