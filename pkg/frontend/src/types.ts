/** Shared types for the diagnosis console. */

export const SEVERITY_KEYS = ["very_low", "low", "medium", "high"] as const;
export type SeverityKey = (typeof SEVERITY_KEYS)[number];

/** JSON body of POST /api/v1/detect. */
export interface DetectResponse {
  probability: number;
  label: string;
  model_version: string;
}

/** JSON body of POST /api/v1/severity. */
export interface SeverityResponse {
  probabilities: Record<SeverityKey, number>;
  label: string;
  model_version: string;
}

/** JSON body of POST /api/v1/gradcam. */
export interface GradcamResponse {
  overlay_ppm_base64: string;
  target_class: string;
  source_layer: string;
  model_version: string;
}

/** JSON body of POST /api/v1/translate. */
export interface TranslateResponse {
  clean_spectrogram_pgm_base64: string;
  audio_wav_base64: string;
  model_version: string;
}

/** One analysis panel's outcome: a value or a display-ready error. */
export type PanelResult<T> =
  | { ok: true; value: T }
  | { ok: false; error: string };

/**
 * Everything one analysis run produced. The view renders from this
 * object alone: panels whose field is missing simply do not render, and
 * a failed panel renders its error without blocking the others.
 */
export interface SessionResult {
  /** Human-readable name of the analyzed clip. */
  clipName: string;
  /** Clip length in seconds, as measured client-side before upload. */
  clipSeconds: number;
  /** Unix milliseconds when the run started / finished. */
  startedAt: number;
  finishedAt: number;
  detect?: PanelResult<DetectResponse>;
  severity?: PanelResult<SeverityResponse>;
  /** Gradcam converted for display: a data URI plus its metadata. */
  gradcam?: PanelResult<{
    overlayDataUri: string;
    targetClass: string;
    sourceLayer: string;
  }>;
  /** Translation converted for display. */
  translate?: PanelResult<{
    spectrogramDataUri: string;
    audioDataUri: string;
  }>;
}
