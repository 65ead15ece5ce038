/** Rule-based language model honoring the two instruction templates. */

import { ModelRejection } from "../protocol.js";

const CATEGORY_HEADS: Array<[string, string[]]> = [
  ["face_closeup", ["face", "portrait", "closeup", "smile", "eyes", "expression"]],
  [
    "subject_attribute",
    ["man", "woman", "boy", "girl", "person", "lady", "guy", "child", "dancer", "singer"],
  ],
  [
    "clothing",
    ["jacket", "coat", "shirt", "dress", "suit", "hat", "scarf", "jeans", "sweater", "gown"],
  ],
  [
    "environment",
    ["station", "street", "park", "room", "beach", "forest", "city", "kitchen", "garden",
     "library", "stage", "cafe", "field", "mountain", "lake"],
  ],
  [
    "other",
    ["sneakers", "shoes", "boots", "umbrella", "guitar", "bicycle", "phone", "book",
     "camera", "dog", "cat", "feet", "reflection", "mirror", "flowers", "coffee"],
  ],
];

const MODIFIERS = new Set([
  "young", "old", "little", "big", "tall", "small", "red", "blue", "green", "black",
  "white", "golden", "yellow", "crowded", "busy", "sunny", "dark", "bright", "elegant",
  "quiet", "leather", "vintage", "warm",
]);

const PERSON_CATEGORIES = new Set(["subject_attribute", "face_closeup"]);
const POSSESSIVES = new Set(["his", "her", "their", "its"]);

const CUES = [
  "with subtle shifts in facial expression",
  "blinking naturally",
  "gaze drifting toward the camera",
];

function afterMarker(prompt: string, marker: string): string {
  const index = prompt.indexOf(marker);
  if (index < 0) {
    throw new ModelRejection("bad_prompt", `missing ${marker}`);
  }
  return prompt.slice(index + marker.length).trim();
}

function extractEntities(text: string): string[] {
  const words = text.toLowerCase().match(/[a-z]+(?:[-'][a-z]+)*/g) ?? [];
  const lines: string[] = [];
  const used = new Array<boolean>(words.length).fill(false);
  let seenPerson = false;
  for (let i = 0; i < words.length; i++) {
    if (used[i]) continue;
    const category = CATEGORY_HEADS.find(([, heads]) => heads.includes(words[i]))?.[0];
    if (!category) continue;
    let start = i;
    while (start > 0 && !used[start - 1] && MODIFIERS.has(words[start - 1])) start--;
    let end = i + 1;
    while (end < words.length && /ing$/.test(words[end]) && words[end].length >= 6) end++;
    for (let k = start; k < end; k++) used[k] = true;
    let role = "primary";
    if (PERSON_CATEGORIES.has(category)) {
      const owned = start > 0 && POSSESSIVES.has(words[start - 1]);
      if (seenPerson && !owned) role = "background";
      seenPerson = true;
    }
    lines.push(`entity: ${category} | ${role} | ${words.slice(start, end).join(" ")}`);
  }
  return lines;
}

function bindPronouns(text: string, gender: string): string {
  if (gender !== "masculine" && gender !== "feminine") return text;
  const toMasculine: Record<string, string> = {
    she: "he", hers: "his", herself: "himself",
  };
  const toFeminine: Record<string, string> = {
    he: "she", him: "her", himself: "herself",
  };
  return text.replace(/\b([A-Za-z]+)\b/g, (token, _word, offset: number) => {
    const lower = token.toLowerCase();
    let replacement: string | undefined;
    if (gender === "masculine") {
      replacement = toMasculine[lower];
      if (lower === "her") {
        const rest = text.slice(offset + token.length);
        replacement = /^\s+[a-z]/i.test(rest) ? "his" : "him";
      }
    } else {
      replacement = toFeminine[lower];
      if (lower === "his") {
        const rest = text.slice(offset + token.length);
        replacement = /^\s+[a-z]/i.test(rest) ? "her" : "hers";
      }
    }
    if (!replacement) return token;
    return token[0] === token[0].toUpperCase()
      ? replacement[0].toUpperCase() + replacement.slice(1)
      : replacement;
  });
}

function scanGender(text: string): string {
  const words = new Set(text.toLowerCase().match(/[a-z]+/g) ?? []);
  const masculine = ["man", "boy", "he", "him", "his", "male", "guy"];
  const feminine = ["woman", "girl", "she", "her", "hers", "female", "lady"];
  const hasMasculine = masculine.some((w) => words.has(w));
  const hasFeminine = feminine.some((w) => words.has(w));
  if (hasMasculine && !hasFeminine) return "masculine";
  if (hasFeminine && !hasMasculine) return "feminine";
  return "unspecified";
}

export function completeInstruction(prompt: string): string {
  if (prompt.includes("TASK: spatial-entities")) {
    const input = afterMarker(prompt, "INPUT: ");
    const lines = extractEntities(input);
    if (lines.length === 0) {
      throw new ModelRejection("no_entities", "no extractable visual elements");
    }
    return lines.join("\n");
  }
  if (prompt.includes("TASK: temporal-polish")) {
    const genderLine = afterMarker(prompt, "GENDER: ").split("\n")[0].trim();
    const input = afterMarker(prompt, "INPUT: ");
    const gender = genderLine === "unspecified" ? scanGender(input) : genderLine;
    const rewritten = bindPronouns(input, gender);
    const promptWords = new Set(rewritten.toLowerCase().match(/[a-z]+/g) ?? []);
    const cue =
      CUES.find((candidate) =>
        (candidate.match(/[a-z]{4,}/g) ?? []).every((w) => !promptWords.has(w)),
      ) ?? CUES[0];
    return `gender: ${gender}\nrewritten: ${rewritten}, ${cue}\ncues: ${cue}`;
  }
  throw new ModelRejection("unknown_task", "prompt carries no known TASK marker");
}
