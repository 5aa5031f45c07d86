import { Server } from "node:http";
import { AddressInfo } from "node:net";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ConfigError, loadConfig } from "../src/config";
import {
    metaResponseSchema,
    thoughtsResponseSchema,
} from "../src/protocol";
import { createApp } from "../src/server";

const THOUGHTS_BODY = {
    prompt:
        "Start with 4; step 1: add 3; step 2: multiply by 2; " +
        "What is the value after step 2?\n",
    num_candidates: 3,
    stop: "\n",
    temperature: 0.7,
    max_tokens: 256,
};

let server: Server;
let base: string;

beforeAll(async () => {
    const app = createApp({
        modelId: "toy-recurrent-v1",
        layer: 1,
        pooling: "last_token",
        port: 0,
    });
    await new Promise<void>((resolve) => {
        server = app.listen(0, "127.0.0.1", resolve);
    });
    base = `http://127.0.0.1:${(server.address() as AddressInfo).port}`;
});

afterAll(() => {
    server.close();
});

async function post(body: unknown): Promise<Response> {
    return fetch(`${base}/v1/thoughts`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: typeof body === "string" ? body : JSON.stringify(body),
    });
}

describe("GET /v1/meta", () => {
    it("returns the configured id and the model width", async () => {
        const resp = await fetch(`${base}/v1/meta`);
        expect(resp.status).toBe(200);
        const meta = metaResponseSchema.parse(await resp.json());
        expect(meta).toEqual({ model_id: "toy-recurrent-v1", hidden_dim: 8 });
    });
});

describe("POST /v1/thoughts", () => {
    it("serves schema-valid candidates", async () => {
        const resp = await post(THOUGHTS_BODY);
        expect(resp.status).toBe(200);
        const doc = thoughtsResponseSchema.parse(await resp.json());
        expect(doc.candidates).toHaveLength(3);
        for (const cand of doc.candidates) {
            expect(cand.hidden_state).toHaveLength(8);
        }
    });

    it("is reproducible at temperature 0", async () => {
        const body = { ...THOUGHTS_BODY, temperature: 0, num_candidates: 1 };
        const first = await (await post(body)).json();
        const second = await (await post(body)).json();
        expect(first).toEqual(second);
    });

    it("answers the probe with the prompt state", async () => {
        const resp = await post({
            ...THOUGHTS_BODY,
            num_candidates: 1,
            temperature: 0.0,
            max_tokens: 0,
        });
        expect(resp.status).toBe(200);
        const doc = thoughtsResponseSchema.parse(await resp.json());
        expect(doc.candidates[0].text).toBe("");
        expect(doc.candidates[0].tokens_generated).toBe(0);
        expect(doc.candidates[0].finished).toBe(false);
    });

    it.each([
        ["missing field", { ...THOUGHTS_BODY, prompt: undefined }],
        ["wrong type", { ...THOUGHTS_BODY, temperature: "hot" }],
        ["extra field", { ...THOUGHTS_BODY, seed: 1 }],
        ["zero candidates", { ...THOUGHTS_BODY, num_candidates: 0 }],
        ["negative max_tokens", { ...THOUGHTS_BODY, max_tokens: -1 }],
        ["fractional candidates", { ...THOUGHTS_BODY, num_candidates: 1.5 }],
    ])("rejects %s with 400", async (_name, body) => {
        const resp = await post(JSON.parse(JSON.stringify(body)));
        expect(resp.status).toBe(400);
        const doc = (await resp.json()) as { error: string };
        expect(doc.error).toBeTruthy();
    });

    it("rejects unbounded fan-out with 400", async () => {
        const resp = await post({ ...THOUGHTS_BODY, num_candidates: 1000 });
        expect(resp.status).toBe(400);
    });

    it("rejects non-JSON bodies with 400", async () => {
        const resp = await post("{oops");
        expect(resp.status).toBe(400);
    });

    it("rejects oversize bodies with 413", async () => {
        const resp = await post({
            ...THOUGHTS_BODY,
            prompt: "x".repeat(300_000),
        });
        expect(resp.status).toBe(413);
    });
});

describe("routing", () => {
    it("unknown paths return JSON 404", async () => {
        const resp = await fetch(`${base}/v2/meta`);
        expect(resp.status).toBe(404);
    });
});

describe("configuration", () => {
    it("defaults", () => {
        expect(loadConfig({})).toEqual({
            modelId: "toy-recurrent-v1",
            layer: 1,
            pooling: "last_token",
            port: 8077,
        });
    });

    it("reads MODEL_ID, LAYER, POOLING, PORT", () => {
        expect(
            loadConfig({
                MODEL_ID: "toy-recurrent-v2",
                LAYER: "0",
                POOLING: "mean",
                PORT: "9000",
            }),
        ).toEqual({
            modelId: "toy-recurrent-v2",
            layer: 0,
            pooling: "mean",
            port: 9000,
        });
        expect(loadConfig({ LAYER: "final" }).layer).toBe(1);
    });

    it.each([
        ["LAYER out of range", { LAYER: "7" }],
        ["LAYER not a number", { LAYER: "last" }],
        ["POOLING unknown", { POOLING: "cls" }],
        ["PORT not a port", { PORT: "nope" }],
        ["PORT out of range", { PORT: "70000" }],
        ["MODEL_ID empty", { MODEL_ID: "" }],
    ])("startup fails on %s", (_name, env) => {
        expect(() => loadConfig(env)).toThrow(ConfigError);
    });
});
