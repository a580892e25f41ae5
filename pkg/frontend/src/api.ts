/** Typed fetch client for the diagnosis service. */

import type {
  DetectResponse,
  GradcamResponse,
  SeverityResponse,
  TranslateResponse,
} from "./types.js";
import { SEVERITY_KEYS } from "./types.js";

export const DEFAULT_BASE_URL = "http://127.0.0.1:8080";

/** An HTTP or schema failure, phrased for direct panel display. */
export class ServiceError extends Error {}

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function finiteUnit(value: unknown, field: string): number {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new ServiceError(`service sent a non-numeric ${field}`);
  }
  if (value < 0 || value > 1) {
    throw new ServiceError(`service sent ${field}=${value}, outside [0, 1]`);
  }
  return value;
}

function requireString(value: unknown, field: string): string {
  if (typeof value !== "string" || value.length === 0) {
    throw new ServiceError(`service response is missing ${field}`);
  }
  return value;
}

export function parseDetect(body: unknown): DetectResponse {
  if (!isRecord(body)) throw new ServiceError("malformed detect response");
  return {
    probability: finiteUnit(body.probability, "probability"),
    label: requireString(body.label, "label"),
    model_version: requireString(body.model_version, "model_version"),
  };
}

export function parseSeverity(body: unknown): SeverityResponse {
  if (!isRecord(body) || !isRecord(body.probabilities)) {
    throw new ServiceError("malformed severity response");
  }
  const probabilities = {} as SeverityResponse["probabilities"];
  for (const key of SEVERITY_KEYS) {
    probabilities[key] = finiteUnit(
      body.probabilities[key],
      `probabilities.${key}`,
    );
  }
  return {
    probabilities,
    label: requireString(body.label, "label"),
    model_version: requireString(body.model_version, "model_version"),
  };
}

export function parseGradcam(body: unknown): GradcamResponse {
  if (!isRecord(body)) throw new ServiceError("malformed gradcam response");
  return {
    overlay_ppm_base64: requireString(
      body.overlay_ppm_base64,
      "overlay_ppm_base64",
    ),
    target_class: requireString(body.target_class, "target_class"),
    source_layer: requireString(body.source_layer, "source_layer"),
    model_version: requireString(body.model_version, "model_version"),
  };
}

export function parseTranslate(body: unknown): TranslateResponse {
  if (!isRecord(body)) throw new ServiceError("malformed translate response");
  return {
    clean_spectrogram_pgm_base64: requireString(
      body.clean_spectrogram_pgm_base64,
      "clean_spectrogram_pgm_base64",
    ),
    audio_wav_base64: requireString(body.audio_wav_base64, "audio_wav_base64"),
    model_version: requireString(body.model_version, "model_version"),
  };
}

const STATUS_HINTS: Record<number, string> = {
  400: "the upload was missing or not decodable audio",
  413: "the clip is longer than the 30-second limit",
  422: "the audio carries no usable signal",
};

export class DiagnosisClient {
  constructor(
    private readonly baseUrl: string = DEFAULT_BASE_URL,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async post<T>(
    endpoint: string,
    wav: Uint8Array,
    parse: (body: unknown) => T,
  ): Promise<T> {
    const form = new FormData();
    // Copy exactly the view's range so a subarray never leaks its whole buffer.
    const bytes = wav.buffer.slice(
      wav.byteOffset,
      wav.byteOffset + wav.byteLength,
    ) as ArrayBuffer;
    form.append("audio", new Blob([bytes], { type: "audio/wav" }), "clip.wav");
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${endpoint}`, {
        method: "POST",
        body: form,
      });
    } catch {
      throw new ServiceError(`cannot reach the service at ${this.baseUrl}`);
    }
    if (!response.ok) {
      const hint = STATUS_HINTS[response.status];
      throw new ServiceError(
        hint
          ? `rejected (${response.status}): ${hint}`
          : `service error ${response.status}`,
      );
    }
    let body: unknown;
    try {
      body = await response.json();
    } catch {
      throw new ServiceError("service sent a non-JSON response");
    }
    return parse(body);
  }

  detect(wav: Uint8Array): Promise<DetectResponse> {
    return this.post("/api/v1/detect", wav, parseDetect);
  }

  severity(wav: Uint8Array): Promise<SeverityResponse> {
    return this.post("/api/v1/severity", wav, parseSeverity);
  }

  gradcam(wav: Uint8Array): Promise<GradcamResponse> {
    return this.post("/api/v1/gradcam", wav, parseGradcam);
  }

  translate(wav: Uint8Array): Promise<TranslateResponse> {
    return this.post("/api/v1/translate", wav, parseTranslate);
  }
}
