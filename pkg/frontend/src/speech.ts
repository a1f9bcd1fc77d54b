/** Text-to-speech wrapper over the platform synthesis API.
 *
 * Degrades to a visible notice when synthesis is missing (headless
 * browsers, some webviews). The synth is injectable for tests. */

export interface SynthLike {
  speaking: boolean;
  cancel(): void;
  speak(utterance: { text: string }): void;
}

function platformSynth(): SynthLike | null {
  const synth = (globalThis as { speechSynthesis?: SpeechSynthesis })
    .speechSynthesis;
  if (!synth) return null;
  return {
    get speaking() {
      return synth.speaking;
    },
    cancel: () => synth.cancel(),
    speak: (utterance) =>
      synth.speak(new SpeechSynthesisUtterance(utterance.text)),
  };
}

export class Speaker {
  private readonly synth: SynthLike | null;

  constructor(synth?: SynthLike | null) {
    this.synth = synth === undefined ? platformSynth() : synth;
  }

  get available(): boolean {
    return this.synth !== null;
  }

  /** Start reading, or stop if already speaking. Returns what happened so
   * the caller can surface "speech unavailable". */
  toggle(text: string): "started" | "stopped" | "unavailable" | "empty" {
    if (!this.synth) return "unavailable";
    if (this.synth.speaking) {
      this.synth.cancel();
      return "stopped";
    }
    if (!text.trim()) return "empty";
    this.synth.speak({ text });
    return "started";
  }

  stop(): void {
    this.synth?.cancel();
  }
}
