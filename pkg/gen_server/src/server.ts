import express, {
    Express,
    NextFunction,
    Request,
    Response,
} from "express";

import { ConfigError, loadConfig, ServerConfig } from "./config";
import { ToyRecurrentModel } from "./model";
import { thoughtsRequestSchema } from "./protocol";

// protective ceiling; one request never fans out unboundedly
const MAX_CANDIDATES = 64;
const BODY_LIMIT = "256kb";

export function createApp(config: ServerConfig): Express {
    const model = new ToyRecurrentModel(config.layer, config.pooling);
    const app = express();
    app.use(express.json({ limit: BODY_LIMIT }));

    app.get("/v1/meta", (_req: Request, res: Response) => {
        res.json({ model_id: config.modelId, hidden_dim: model.hiddenDim });
    });

    app.post("/v1/thoughts", (req: Request, res: Response) => {
        const parsed = thoughtsRequestSchema.safeParse(req.body);
        if (!parsed.success) {
            res.status(400).json({
                error: `invalid request: ${parsed.error.issues
                    .map((i) => `${i.path.join(".") || "body"}: ${i.message}`)
                    .join("; ")}`,
            });
            return;
        }
        if (parsed.data.num_candidates > MAX_CANDIDATES) {
            res.status(400).json({
                error: `num_candidates must be <= ${MAX_CANDIDATES}`,
            });
            return;
        }
        res.json({ candidates: model.generate(parsed.data) });
    });

    app.use((_req: Request, res: Response) => {
        res.status(404).json({ error: "not found" });
    });

    // body-parser signals oversize and malformed JSON through next(err)
    app.use(
        (err: Error & { type?: string; status?: number },
         _req: Request, res: Response, next: NextFunction) => {
            if (res.headersSent) {
                next(err);
                return;
            }
            if (err.type === "entity.too.large") {
                res.status(413).json({ error: "request body too large" });
            } else if (err.status === 400 || err instanceof SyntaxError) {
                res.status(400).json({ error: "request body is not JSON" });
            } else {
                res.status(500).json({ error: "internal error" });
            }
        },
    );

    return app;
}

function main(): void {
    let config: ServerConfig;
    try {
        config = loadConfig(process.env);
    } catch (err) {
        if (err instanceof ConfigError) {
            console.error(`configuration error: ${err.message}`);
            process.exit(1);
        }
        throw err;
    }
    const app = createApp(config);
    app.listen(config.port, "127.0.0.1", () => {
        console.log(
            `serving ${config.modelId} on http://127.0.0.1:${config.port} ` +
            `(layer ${config.layer}, pooling ${config.pooling})`,
        );
    });
}

if (require.main === module) {
    main();
}
