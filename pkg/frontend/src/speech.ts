// Optional speech hook: when the browser exposes SpeechRecognition, the mic
// button fills the chat box and tags it channel=transcript; otherwise the
// button disappears and typed chat is unaffected.

type RecognitionCtor = new () => {
  lang: string;
  interimResults: boolean;
  maxAlternatives: number;
  onresult: ((event: { results: { [i: number]: { [j: number]: { transcript: string } } } }) => void) | null;
  onend: (() => void) | null;
  start(): void;
};

export function attachSpeech(button: HTMLButtonElement,
                             input: HTMLInputElement): boolean {
  const win = button.ownerDocument.defaultView as
    (Window & { SpeechRecognition?: RecognitionCtor;
                webkitSpeechRecognition?: RecognitionCtor }) | null;
  const Recognition = win?.SpeechRecognition ?? win?.webkitSpeechRecognition;
  if (!Recognition) {
    button.hidden = true;
    return false;
  }

  // Typing reverts the channel; only an untouched transcription keeps it.
  input.addEventListener("input", () => {
    input.dataset.channel = "chat";
  });

  button.addEventListener("click", () => {
    const recognition = new Recognition();
    recognition.lang = "en-US";
    recognition.interimResults = false;
    recognition.maxAlternatives = 1;
    button.disabled = true;
    recognition.onresult = (event) => {
      const transcript = event.results[0]?.[0]?.transcript ?? "";
      if (transcript) {
        input.value = transcript;
        input.dataset.channel = "transcript";
      }
    };
    recognition.onend = () => {
      button.disabled = false;
    };
    recognition.start();
  });
  return true;
}
