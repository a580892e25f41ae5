/**
 * Decode the service's portable-anymap payloads (binary PPM/PGM) and
 * re-encode them as BMP data URIs the browser renders natively — no
 * canvas involved, so every step stays pure and unit-testable.
 */

export interface RgbImage {
  width: number;
  height: number;
  /** Row-major RGB triples, top row first. */
  rgb: Uint8Array;
}

export function base64ToBytes(base64: string): Uint8Array {
  const bin = atob(base64);
  const out = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
  return out;
}

export function bytesToBase64(bytes: Uint8Array): string {
  let bin = "";
  const chunk = 0x8000;
  for (let i = 0; i < bytes.length; i += chunk) {
    bin += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return btoa(bin);
}

/** Parse "P6\n<w> <h>\n255\n" (or P5) headers; whitespace is flexible. */
function parseAnymapHeader(
  bytes: Uint8Array,
  magic: string,
): { width: number; height: number; offset: number } {
  const fields: number[] = [];
  let i = 0;
  const readToken = (): string => {
    while (i < bytes.length && /\s/.test(String.fromCharCode(bytes[i]!))) i++;
    let token = "";
    while (i < bytes.length && !/\s/.test(String.fromCharCode(bytes[i]!))) {
      token += String.fromCharCode(bytes[i]!);
      i++;
    }
    return token;
  };
  const seen = readToken();
  if (seen !== magic) {
    throw new Error(`expected ${magic} image, got ${seen || "empty data"}`);
  }
  while (fields.length < 3) {
    const token = readToken();
    if (token === "") throw new Error(`truncated ${magic} header`);
    if (token.startsWith("#")) {
      // A comment runs to end of line, not end of token.
      while (i < bytes.length && bytes[i] !== 0x0a) i++;
      continue;
    }
    const value = Number(token);
    if (!Number.isInteger(value) || value <= 0) {
      throw new Error(`bad ${magic} header field ${token}`);
    }
    fields.push(value);
  }
  if (fields[2] !== 255) throw new Error(`unsupported maxval ${fields[2]}`);
  i++; // exactly one whitespace byte separates header from payload
  return { width: fields[0]!, height: fields[1]!, offset: i };
}

/** Binary PPM (P6, maxval 255) to RGB pixels. */
export function decodePpm(bytes: Uint8Array): RgbImage {
  const { width, height, offset } = parseAnymapHeader(bytes, "P6");
  const expected = width * height * 3;
  const rgb = bytes.subarray(offset, offset + expected);
  if (rgb.length !== expected) {
    throw new Error(
      `PPM payload holds ${rgb.length} bytes, expected ${expected}`,
    );
  }
  return { width, height, rgb: new Uint8Array(rgb) };
}

/** Binary PGM (P5, maxval 255) to RGB pixels (gray replicated). */
export function decodePgm(bytes: Uint8Array): RgbImage {
  const { width, height, offset } = parseAnymapHeader(bytes, "P5");
  const expected = width * height;
  const gray = bytes.subarray(offset, offset + expected);
  if (gray.length !== expected) {
    throw new Error(
      `PGM payload holds ${gray.length} bytes, expected ${expected}`,
    );
  }
  const rgb = new Uint8Array(expected * 3);
  for (let i = 0; i < expected; i++) {
    const v = gray[i]!;
    rgb[i * 3] = v;
    rgb[i * 3 + 1] = v;
    rgb[i * 3 + 2] = v;
  }
  return { width, height, rgb };
}

/** Encode RGB pixels as an uncompressed 24-bit BMP (BITMAPINFOHEADER). */
export function encodeBmp(image: RgbImage): Uint8Array {
  const { width, height, rgb } = image;
  const rowBytes = width * 3;
  const padded = (rowBytes + 3) & ~3; // each BMP row pads to 4 bytes
  const payload = padded * height;
  const buffer = new ArrayBuffer(54 + payload);
  const view = new DataView(buffer);
  const bytes = new Uint8Array(buffer);

  view.setUint8(0, 0x42); // 'B'
  view.setUint8(1, 0x4d); // 'M'
  view.setUint32(2, 54 + payload, true);
  view.setUint32(10, 54, true); // payload offset
  view.setUint32(14, 40, true); // info header size
  view.setInt32(18, width, true);
  view.setInt32(22, height, true); // positive: bottom row first
  view.setUint16(26, 1, true); // planes
  view.setUint16(28, 24, true); // bits per pixel
  view.setUint32(34, payload, true);

  for (let y = 0; y < height; y++) {
    const srcRow = height - 1 - y; // flip: BMP stores bottom-up
    for (let x = 0; x < width; x++) {
      const src = (srcRow * width + x) * 3;
      const dst = 54 + y * padded + x * 3;
      bytes[dst] = rgb[src + 2]!; // BMP wants BGR order
      bytes[dst + 1] = rgb[src + 1]!;
      bytes[dst + 2] = rgb[src]!;
    }
  }
  return bytes;
}

/** Base64 PPM/PGM payload straight to an <img>-ready data URI. */
export function ppmBase64ToDataUri(base64: string): string {
  const bmp = encodeBmp(decodePpm(base64ToBytes(base64)));
  return `data:image/bmp;base64,${bytesToBase64(bmp)}`;
}

export function pgmBase64ToDataUri(base64: string): string {
  const bmp = encodeBmp(decodePgm(base64ToBytes(base64)));
  return `data:image/bmp;base64,${bytesToBase64(bmp)}`;
}
