/** Flag/env parsing for the service entry point. */

export interface ServiceConfig {
  backend: "echo" | "command";
  modelId: string;
  modelCmd: string | null;
  host: string;
  port: number;
  maxBatch: number;
  device: string | null;
  deterministic: boolean;
}

export function parseConfig(argv: string[], env: NodeJS.ProcessEnv = {}): ServiceConfig {
  const config: ServiceConfig = {
    backend: "command",
    modelId: env.GEC_MODEL_ID ?? "model@unversioned",
    modelCmd: env.GEC_MODEL_CMD ?? null,
    host: env.GEC_HOST ?? "127.0.0.1",
    port: env.GEC_PORT ? parseInt(env.GEC_PORT, 10) : 8475,
    maxBatch: 32,
    device: env.GEC_DEVICE ?? null,
    deterministic: true,
  };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const next = () => {
      const value = argv[++i];
      if (value === undefined) throw new Error(`${flag} needs a value`);
      return value;
    };
    switch (flag) {
      case "--backend": {
        const value = next();
        if (value !== "echo" && value !== "command") {
          throw new Error(`--backend must be echo or command, got ${value}`);
        }
        config.backend = value;
        break;
      }
      case "--model-id":
        config.modelId = next();
        break;
      case "--model-cmd":
        config.modelCmd = next();
        break;
      case "--host":
        config.host = next();
        break;
      case "--port":
        config.port = parseInt(next(), 10);
        break;
      case "--max-batch":
        config.maxBatch = parseInt(next(), 10);
        break;
      case "--device":
        config.device = next();
        break;
      case "--nondeterministic":
        config.deterministic = false;
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (!config.deterministic) {
    // sampling/beam nondeterminism would invalidate caches and probes
    throw new Error("deterministic decoding is required; remove --nondeterministic");
  }
  if (Number.isNaN(config.port) || config.port < 0 || config.port > 65535) {
    throw new Error(`bad port ${config.port}`);
  }
  if (Number.isNaN(config.maxBatch) || config.maxBatch < 1) {
    throw new Error(`--max-batch must be >= 1`);
  }
  if (config.backend === "command" && !config.modelCmd) {
    throw new Error("--backend command requires --model-cmd (or GEC_MODEL_CMD)");
  }
  return config;
}
