/** One analysis run: all four endpoints concurrently, failures isolated. */

import type { DiagnosisClient } from "./api.js";
import type { PanelResult, SessionResult } from "./types.js";
import { pgmBase64ToDataUri, ppmBase64ToDataUri } from "./images.js";

async function panel<T>(work: Promise<T>): Promise<PanelResult<T>> {
  try {
    return { ok: true, value: await work };
  } catch (error) {
    return {
      ok: false,
      error: error instanceof Error ? error.message : String(error),
    };
  }
}

/**
 * Fire the four analyses concurrently and fold every outcome — success
 * or failure — into one SessionResult. A panel that fails never blocks
 * or hides the others.
 */
export async function runAnalyses(
  client: DiagnosisClient,
  wav: Uint8Array,
  clipName: string,
  clipSeconds: number,
  now: () => number = Date.now,
): Promise<SessionResult> {
  const startedAt = now();
  const [detect, severity, gradcam, translate] = await Promise.all([
    panel(client.detect(wav)),
    panel(client.severity(wav)),
    panel(
      client.gradcam(wav).then((r) => ({
        overlayDataUri: ppmBase64ToDataUri(r.overlay_ppm_base64),
        targetClass: r.target_class,
        sourceLayer: r.source_layer,
      })),
    ),
    panel(
      client.translate(wav).then((r) => ({
        spectrogramDataUri: pgmBase64ToDataUri(r.clean_spectrogram_pgm_base64),
        audioDataUri: `data:audio/wav;base64,${r.audio_wav_base64}`,
      })),
    ),
  ]);
  return {
    clipName,
    clipSeconds,
    startedAt,
    finishedAt: now(),
    detect,
    severity,
    gradcam,
    translate,
  };
}
