/** Browser wiring: microphone/file input, upload conditioning, rendering. */

import { DEFAULT_BASE_URL, DiagnosisClient } from "./api.js";
import { runAnalyses } from "./session.js";
import { renderSession, escapeHtml } from "./view.js";
import { prepareUpload, MAX_SECONDS } from "./wav.js";

function element<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id} in index.html`);
  return node as T;
}

const results = element<HTMLDivElement>("results");
const banner = element<HTMLDivElement>("banner");
const recordButton = element<HTMLButtonElement>("record");
const fileInput = element<HTMLInputElement>("file");
const baseUrlInput = element<HTMLInputElement>("base-url");

baseUrlInput.value =
  new URLSearchParams(location.search).get("api") ??
  localStorage.getItem("dyslab-base-url") ??
  DEFAULT_BASE_URL;
baseUrlInput.addEventListener("change", () => {
  localStorage.setItem("dyslab-base-url", baseUrlInput.value);
});

function showBanner(message: string, tone: "error" | "info"): void {
  banner.className = `banner banner-${tone}`;
  banner.innerHTML = escapeHtml(message);
  banner.hidden = false;
}

function clearBanner(): void {
  banner.hidden = true;
}

function setBusy(busy: boolean): void {
  recordButton.disabled = busy && recordButton.dataset.recording !== "yes";
  fileInput.disabled = busy;
  document.body.classList.toggle("busy", busy);
}

/** Decode any audio container the browser understands into raw channels. */
async function decodeAudio(
  data: ArrayBuffer,
): Promise<{ channels: Float32Array[]; sampleRate: number }> {
  const context = new AudioContext();
  try {
    const decoded = await context.decodeAudioData(data);
    const channels: Float32Array[] = [];
    for (let c = 0; c < decoded.numberOfChannels; c++) {
      channels.push(decoded.getChannelData(c));
    }
    return { channels, sampleRate: decoded.sampleRate };
  } finally {
    void context.close();
  }
}

async function analyze(data: ArrayBuffer, clipName: string): Promise<void> {
  clearBanner();
  let decoded;
  try {
    decoded = await decodeAudio(data);
  } catch {
    showBanner(`${clipName} is not decodable audio`, "error");
    return;
  }
  let upload;
  try {
    upload = prepareUpload(decoded.channels, decoded.sampleRate);
  } catch (error) {
    showBanner(error instanceof Error ? error.message : String(error), "error");
    return;
  }
  setBusy(true);
  try {
    const client = new DiagnosisClient(baseUrlInput.value);
    const session = await runAnalyses(
      client,
      upload.wav,
      clipName,
      upload.seconds,
    );
    results.innerHTML = renderSession(session);
  } finally {
    setBusy(false);
  }
}

// -- file upload ---------------------------------------------------------------

fileInput.addEventListener("change", async () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  await analyze(await file.arrayBuffer(), file.name);
  fileInput.value = "";
});

// -- microphone recording --------------------------------------------------------

let recorder: MediaRecorder | null = null;
let chunks: Blob[] = [];

async function startRecording(): Promise<void> {
  let stream: MediaStream;
  try {
    stream = await navigator.mediaDevices.getUserMedia({ audio: true });
  } catch {
    showBanner(
      "microphone permission denied — allow access or upload a file instead",
      "error",
    );
    return;
  }
  chunks = [];
  recorder = new MediaRecorder(stream);
  recorder.addEventListener("dataavailable", (event) => {
    if (event.data.size > 0) chunks.push(event.data);
  });
  recorder.addEventListener("stop", () => {
    stream.getTracks().forEach((track) => track.stop());
    const blob = new Blob(chunks, { type: recorder?.mimeType });
    void blob.arrayBuffer().then((data) => analyze(data, "recording"));
  });
  recorder.start();
  recordButton.dataset.recording = "yes";
  recordButton.textContent = "Stop";
  showBanner(`recording — stop within ${MAX_SECONDS} s`, "info");
  // Hard stop at the service limit so the clip stays uploadable.
  setTimeout(() => {
    if (recorder?.state === "recording") recorder.stop();
  }, MAX_SECONDS * 1000);
}

recordButton.addEventListener("click", () => {
  if (recorder?.state === "recording") {
    recorder.stop();
    recordButton.dataset.recording = "no";
    recordButton.textContent = "Record";
    clearBanner();
  } else {
    void startRecording();
  }
});
