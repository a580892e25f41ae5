/** Client-side audio conditioning: resample to 16 kHz mono, encode PCM16 WAV. */

export const SERVICE_RATE = 16000;
export const MAX_SECONDS = 30;

/** Average multi-channel data down to one channel. */
export function toMono(channels: Float32Array[]): Float32Array {
  if (channels.length === 0) return new Float32Array(0);
  const first = channels[0]!;
  if (channels.length === 1) return first;
  const out = new Float32Array(first.length);
  for (const ch of channels) {
    for (let i = 0; i < out.length; i++) out[i] = out[i]! + (ch[i] ?? 0);
  }
  for (let i = 0; i < out.length; i++) out[i] = out[i]! / channels.length;
  return out;
}

/** Linear-interpolation resample; output length = round(n * target/source). */
export function resampleLinear(
  samples: Float32Array,
  sourceRate: number,
  targetRate: number,
): Float32Array {
  if (sourceRate === targetRate) return samples;
  const outLength = Math.round((samples.length * targetRate) / sourceRate);
  const out = new Float32Array(outLength);
  if (samples.length === 0 || outLength === 0) return out;
  const step = sourceRate / targetRate;
  for (let i = 0; i < outLength; i++) {
    const pos = i * step;
    const low = Math.floor(pos);
    const high = Math.min(low + 1, samples.length - 1);
    const frac = pos - low;
    const a = samples[Math.min(low, samples.length - 1)] ?? 0;
    const b = samples[high] ?? 0;
    out[i] = a + (b - a) * frac;
  }
  return out;
}

/** Encode mono float samples in [-1, 1] as a PCM16 WAV file. */
export function encodeWavPcm16(
  samples: Float32Array,
  sampleRate: number,
): Uint8Array {
  const payloadBytes = samples.length * 2;
  const buffer = new ArrayBuffer(44 + payloadBytes);
  const view = new DataView(buffer);

  view.setUint32(0, 0x52494646, false); // 'RIFF'
  view.setUint32(4, 36 + payloadBytes, true);
  view.setUint32(8, 0x57415645, false); // 'WAVE'
  view.setUint32(12, 0x666d7420, false); // 'fmt '
  view.setUint32(16, 16, true); // fmt chunk size
  view.setUint16(20, 1, true); // PCM
  view.setUint16(22, 1, true); // mono
  view.setUint32(24, sampleRate, true);
  view.setUint32(28, sampleRate * 2, true); // byte rate
  view.setUint16(32, 2, true); // block align
  view.setUint16(34, 16, true); // bits per sample
  view.setUint32(36, 0x64617461, false); // 'data'
  view.setUint32(40, payloadBytes, true);

  for (let i = 0; i < samples.length; i++) {
    const clamped = Math.max(-1, Math.min(1, samples[i] ?? 0));
    view.setInt16(44 + i * 2, Math.round(clamped * 32767), true);
  }
  return new Uint8Array(buffer);
}

/**
 * Condition decoded audio for upload: mono, 16 kHz, PCM16 WAV.
 * Throws if the clip is empty or longer than the service accepts.
 */
export function prepareUpload(
  channels: Float32Array[],
  sourceRate: number,
): { wav: Uint8Array; seconds: number } {
  const mono = toMono(channels);
  if (mono.length === 0) throw new Error("clip holds no audio samples");
  const resampled = resampleLinear(mono, sourceRate, SERVICE_RATE);
  const seconds = resampled.length / SERVICE_RATE;
  if (seconds > MAX_SECONDS) {
    throw new Error(
      `clip is ${seconds.toFixed(1)} s; the service accepts at most ${MAX_SECONDS} s`,
    );
  }
  return { wav: encodeWavPcm16(resampled, SERVICE_RATE), seconds };
}
