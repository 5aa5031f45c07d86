/** Wire protocol types, mirroring fixtures/wire/schema verbatim:
 *
 *     GET  /v1/meta      -> {"model_id", "hidden_dim"}
 *     POST /v1/thoughts  {"prompt", "num_candidates", "stop",
 *                         "temperature", "max_tokens"} -> {"candidates"}
 *
 * max_tokens 0 is the embedding probe; answer is non-null only when
 * finished is true.
 */

import { z } from "zod";

export const metaResponseSchema = z.strictObject({
    model_id: z.string().min(1),
    hidden_dim: z.number().int().min(1),
});

export const thoughtsRequestSchema = z.strictObject({
    prompt: z.string(),
    num_candidates: z.number().int().min(1),
    stop: z.string(),
    temperature: z.number().min(0),
    max_tokens: z.number().int().min(0),
});

export const candidateSchema = z.strictObject({
    text: z.string(),
    hidden_state: z.array(z.number()).min(1),
    tokens_generated: z.number().int().min(0),
    finished: z.boolean(),
    answer: z.string().nullable(),
});

export const thoughtsResponseSchema = z.strictObject({
    candidates: z.array(candidateSchema).min(1),
});

export type MetaResponse = z.infer<typeof metaResponseSchema>;
export type ThoughtsRequest = z.infer<typeof thoughtsRequestSchema>;
export type ThoughtsResponse = z.infer<typeof thoughtsResponseSchema>;
