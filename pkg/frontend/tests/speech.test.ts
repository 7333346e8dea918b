import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { attachSpeech } from "../src/speech";

// jsdom exposes no SpeechRecognition; these tests install a scripted stand-in
// on the window to drive the hook, then remove it again.

class FakeRecognition {
  static last: FakeRecognition | null = null;
  lang = "";
  interimResults = true;
  maxAlternatives = 0;
  onresult: ((event: {
    results: { [i: number]: { [j: number]: { transcript: string } } };
  }) => void) | null = null;
  onend: (() => void) | null = null;
  started = false;

  constructor() {
    FakeRecognition.last = this;
  }

  start(): void {
    this.started = true;
  }

  finish(transcript: string): void {
    this.onresult?.({ results: { 0: { 0: { transcript } } } });
    this.onend?.();
  }
}

function mount(): { button: HTMLButtonElement; input: HTMLInputElement } {
  document.body.innerHTML =
    '<button id="mic" type="button"></button><input id="chat-input" />';
  return {
    button: document.getElementById("mic") as HTMLButtonElement,
    input: document.getElementById("chat-input") as HTMLInputElement,
  };
}

type SpeechWindow = Window & { SpeechRecognition?: unknown };

beforeEach(() => {
  FakeRecognition.last = null;
});

afterEach(() => {
  delete (window as SpeechWindow).SpeechRecognition;
});

describe("speech hook", () => {
  it("hides the mic button when the browser lacks recognition", () => {
    const { button, input } = mount();
    expect(attachSpeech(button, input)).toBe(false);
    expect(button.hidden).toBe(true);
  });

  it("fills the chat box and tags the transcript channel", () => {
    (window as SpeechWindow).SpeechRecognition = FakeRecognition;
    const { button, input } = mount();
    expect(attachSpeech(button, input)).toBe(true);
    expect(button.hidden).toBe(false);

    button.click();
    const recognition = FakeRecognition.last;
    if (!recognition) throw new Error("recognition never constructed");
    expect(recognition.started).toBe(true);
    expect(button.disabled).toBe(true);

    recognition.finish("attack their base now");
    expect(input.value).toBe("attack their base now");
    expect(input.dataset.channel).toBe("transcript");
    expect(button.disabled).toBe(false);
  });

  it("typing afterwards reverts the channel to typed chat", () => {
    (window as SpeechWindow).SpeechRecognition = FakeRecognition;
    const { button, input } = mount();
    attachSpeech(button, input);

    button.click();
    FakeRecognition.last?.finish("turtle up");
    expect(input.dataset.channel).toBe("transcript");

    input.value = "turtle up and expand";
    input.dispatchEvent(new Event("input", { bubbles: true }));
    expect(input.dataset.channel).toBe("chat");
  });

  it("keeps the box untouched when recognition hears nothing", () => {
    (window as SpeechWindow).SpeechRecognition = FakeRecognition;
    const { button, input } = mount();
    attachSpeech(button, input);
    input.value = "half-typed thought";

    button.click();
    FakeRecognition.last?.finish("");
    expect(input.value).toBe("half-typed thought");
    expect(input.dataset.channel).toBeUndefined();
  });
});
