/** The recorded wire fixtures are shared with the Python client; this
 * suite proves the server-side schemas accept every committed instance
 * and that a live model round-trips the committed request. */

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { ToyRecurrentModel } from "../src/model";
import {
    metaResponseSchema,
    thoughtsRequestSchema,
    thoughtsResponseSchema,
} from "../src/protocol";

const WIRE = join(__dirname, "..", "..", "fixtures", "wire");

function fixture(name: string): unknown {
    return JSON.parse(readFileSync(join(WIRE, name), "utf-8"));
}

describe("shared wire fixtures", () => {
    it("meta response instance validates", () => {
        const meta = metaResponseSchema.parse(fixture("meta_response.json"));
        expect(meta.model_id).toBe("toy-recurrent-v1");
        expect(meta.hidden_dim).toBe(8);
    });

    it("request instances validate", () => {
        const probe = thoughtsRequestSchema.parse(
            fixture("probe_request.json"),
        );
        expect(probe.max_tokens).toBe(0);
        const thoughts = thoughtsRequestSchema.parse(
            fixture("thoughts_request.json"),
        );
        expect(thoughts.num_candidates).toBe(3);
    });

    it("response instances validate", () => {
        thoughtsResponseSchema.parse(fixture("probe_response.json"));
        thoughtsResponseSchema.parse(fixture("thoughts_response.json"));
    });

    it("every recorded hidden state matches the advertised hidden_dim", () => {
        const meta = metaResponseSchema.parse(fixture("meta_response.json"));
        for (const name of ["probe_response.json", "thoughts_response.json"]) {
            const doc = thoughtsResponseSchema.parse(fixture(name));
            for (const cand of doc.candidates) {
                expect(cand.hidden_state).toHaveLength(meta.hidden_dim);
            }
        }
    });

    it("recorded answers appear only on finished candidates", () => {
        for (const name of ["probe_response.json", "thoughts_response.json"]) {
            const doc = thoughtsResponseSchema.parse(fixture(name));
            for (const cand of doc.candidates) {
                if (cand.answer !== null) expect(cand.finished).toBe(true);
            }
        }
    });

    it("the committed request round-trips through a live model", () => {
        const model = new ToyRecurrentModel();
        const request = thoughtsRequestSchema.parse(
            fixture("thoughts_request.json"),
        );
        const response = thoughtsResponseSchema.parse({
            candidates: model.generate(request),
        });
        expect(response.candidates).toHaveLength(request.num_candidates);
        for (const cand of response.candidates) {
            expect(cand.hidden_state).toHaveLength(model.hiddenDim);
            if (!cand.finished) {
                expect(cand.text.trim().length).toBeGreaterThan(0);
                expect(cand.answer).toBeNull();
            }
        }
    });

    it("the committed probe request yields a probe-shaped response", () => {
        const model = new ToyRecurrentModel();
        const request = thoughtsRequestSchema.parse(
            fixture("probe_request.json"),
        );
        const [cand] = model.generate(request);
        expect(cand.text).toBe("");
        expect(cand.tokens_generated).toBe(0);
        expect(cand.finished).toBe(false);
        expect(cand.answer).toBeNull();
        expect(cand.hidden_state).toHaveLength(8);
    });
});
