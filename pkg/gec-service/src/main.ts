/** Entry point: parse config, boot the backend, serve until interrupted. */

import { CommandBackend, CorrectionBackend, EchoBackend } from "./backend";
import { parseConfig } from "./config";
import { GecServer } from "./server";

async function main(): Promise<void> {
  const config = parseConfig(process.argv.slice(2), process.env);

  let backend: CorrectionBackend;
  if (config.backend === "echo") {
    backend = new EchoBackend(config.modelId);
  } else {
    const command = new CommandBackend(config.modelCmd as string, config.modelId, {
      ...(config.device ? { GEC_DEVICE: config.device } : {}),
    });
    try {
      await command.ready();
    } catch (err) {
      await command.close();
      throw new Error(`model failed to load: ${(err as Error).message}`);
    }
    backend = command;
  }

  const server = new GecServer(backend, { maxBatch: config.maxBatch });
  const endpoint = await server.listen(config.port, config.host);
  console.log(`gec-service (${backend.fingerprint}) listening on ${endpoint}`);

  const shutdown = () => {
    server.close().then(() => process.exit(0));
  };
  process.on("SIGINT", shutdown);
  process.on("SIGTERM", shutdown);
}

main().catch((err: Error) => {
  console.error(`gec-service: ${err.message}`);
  process.exit(1);
});
