/** Environment configuration: MODEL_ID, LAYER, POOLING, PORT.
 * Bad values fail at startup, never mid-request. */

import { NUM_LAYERS, Pooling } from "./model";

export interface ServerConfig {
    modelId: string;
    layer: number;
    pooling: Pooling;
    port: number;
}

export class ConfigError extends Error {}

export function loadConfig(
    env: Record<string, string | undefined>,
): ServerConfig {
    const modelId = env.MODEL_ID ?? "toy-recurrent-v1";
    if (!modelId) {
        throw new ConfigError("MODEL_ID must be non-empty");
    }

    const layerRaw = env.LAYER ?? "final";
    let layer: number;
    if (layerRaw === "final") {
        layer = NUM_LAYERS - 1;
    } else {
        layer = Number(layerRaw);
        if (!Number.isInteger(layer) || layer < 0 || layer >= NUM_LAYERS) {
            throw new ConfigError(
                `LAYER must be "final" or an integer in [0, ` +
                `${NUM_LAYERS - 1}], got ${JSON.stringify(layerRaw)}`,
            );
        }
    }

    const pooling = env.POOLING ?? "last_token";
    if (pooling !== "last_token" && pooling !== "mean") {
        throw new ConfigError(
            `POOLING must be "last_token" or "mean", got ` +
            JSON.stringify(pooling),
        );
    }

    const portRaw = env.PORT ?? "8077";
    const port = Number(portRaw);
    if (!Number.isInteger(port) || port < 1 || port > 65535) {
        throw new ConfigError(
            `PORT must be an integer in [1, 65535], got ` +
            JSON.stringify(portRaw),
        );
    }

    return { modelId, layer, pooling, port };
}
