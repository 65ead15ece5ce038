/** CLI: serve one capability adapter. */

import { parseArgs } from "node:util";

import { CAPABILITIES, isCapability } from "./protocol.js";
import { AdapterConfig, serveCapability } from "./server.js";

async function main(): Promise<void> {
  const { values } = parseArgs({
    options: {
      capability: { type: "string" },
      port: { type: "string", default: "0" },
      "model-id": { type: "string" },
      "model-source": { type: "string" },
    },
  });
  const capability = values.capability ?? "";
  if (!isCapability(capability)) {
    console.error(
      `--capability must be one of: ${CAPABILITIES.join(", ")}`,
    );
    process.exit(2);
  }
  const config: AdapterConfig = {
    capability,
    port: Number(values.port),
    modelId: values["model-id"],
    modelSource: values["model-source"],
  };
  const server = await serveCapability(config);
  const address = server.address();
  const port = typeof address === "object" && address ? address.port : config.port;
  console.log(`${capability} adapter listening on :${port}`);
  const shutdown = () => server.close(() => process.exit(0));
  process.on("SIGINT", shutdown);
  process.on("SIGTERM", shutdown);
}

main().catch((error) => {
  console.error(error);
  process.exit(1);
});
