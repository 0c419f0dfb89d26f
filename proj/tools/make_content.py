#!/usr/bin/env python3
"""Writes the reviewable conversation content under content/ and pins it in manifest.json."""
import hashlib
import json
import pathlib
import sys

OUT = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).resolve().parent.parent / "content")

GROUPS = [
    (1, "Compassion toward the childhood self", "对童年自我的同情", [1, 2]),
    (2, "Affectional bonding and vowing to care for the childhood self", "与童年自我建立情感纽带并立誓照顾", [3, 4]),
    (3, "Rebuilding the emotional world, zest for life, bonding with nature", "重建情感世界、热爱生活、亲近自然", [5, 7, 9]),
    (4, "Self-regulation of strong emotions", "调节强烈情绪", [6, 8, 11]),
    (5, "(Re)-learning to laugh and being playful", "重新学会欢笑与玩乐", [10, 12]),
    (6, "Learning to change perspective and laugh", "学会转换视角并一笑置之", [13, 18, 19]),
    (7, "Socialising the childhood self", "让童年自我学会社交", [14, 15, 16]),
    (8, "Enhancing tolerance and resilience", "增强包容力与韧性", [17, 20]),
]

PROTOCOLS = {
    1: ("Connecting with the Child", "与童年自我建立联系",
        "Look at a photo of yourself as a child and imagine reaching out to that child.",
        "看着自己童年的照片，想象自己向那个孩子伸出手。"),
    2: ("Laughing at our Two Childhood Pictures", "笑看我们的两张童年照片",
        "Place a happy and an unhappy childhood photo side by side and smile at both.",
        "把一张快乐和一张不快乐的童年照片并排放好，对它们微笑。"),
    3: ("Falling in Love with the Child", "爱上童年的自己",
        "Sing a cheerful song to your childhood self as if speaking to a child you love.",
        "像对待你深爱的孩子一样，为童年的自己唱一首欢快的歌。"),
    4: ("Vow to Adopt the Child as Your Own Child", "立誓将童年自我视如己出",
        "Make a sincere vow to care for your childhood self from now on.",
        "真诚地立下誓言，从现在起照顾童年的自己。"),
    5: ("Maintaining a Loving Relationship with the Child", "与童年自我保持关爱的关系",
        "Spend a few minutes each day giving your childhood self warmth and attention.",
        "每天花几分钟给予童年的自己温暖和关注。"),
    6: ("An Exercise to Process the Painful Childhood Events", "处理童年痛苦经历的练习",
        "Recall a painful childhood event and imagine comforting the child who lived it.",
        "回想一件童年的痛苦往事，想象自己安慰当时的那个孩子。"),
    7: ("Protocols for Creating Zest for Life", "培养生活热情",
        "Picture yourself and your childhood self enjoying an activity full of energy.",
        "想象你和童年的自己一起享受一项充满活力的活动。"),
    8: ("Loosening Facial and Body Muscles", "放松面部和身体肌肉",
        "Relax the muscles of your face and body one by one while breathing slowly.",
        "慢慢呼吸，同时逐一放松面部和身体的肌肉。"),
    9: ("Protocols for Attachment and Love of Nature", "依恋与热爱大自然",
        "Spend time outdoors and share the experience of nature with your childhood self.",
        "到户外走走，与童年的自己一起感受大自然。"),
    10: ("Laughing at, and with One's Self", "自嘲与自乐",
         "Remember a harmless mistake you made and allow yourself to laugh kindly at it.",
         "回想一次无伤大雅的小失误，善意地笑一笑自己。"),
    11: ("Processing Current Negative Emotions", "处理当下的负面情绪",
         "Name the emotion you feel now and imagine soothing your childhood self through it.",
         "说出你此刻的情绪，想象自己陪伴并安抚童年的自己度过它。"),
    12: ("Continuous Laughter", "持续大笑",
         "Start with a gentle smile and let it grow into laughter for a minute.",
         "从一个轻轻的微笑开始，让它慢慢变成一分钟的大笑。"),
    13: ("Changing Our Perspective for Getting Over Negative Emotions", "转换视角以走出负面情绪",
         "Look at a troubling situation from the view of a caring adult.",
         "从一个关爱你的成年人的角度看待令你困扰的情况。"),
    14: ("Protocols for Socializing the Child", "让童年自我学会社交",
         "Imagine guiding your childhood self to share and play kindly with others.",
         "想象引导童年的自己与他人友好地分享和玩耍。"),
    15: ("Recognising and Controlling Narcissism and the Internal Persecutor", "识别并控制自恋与内在迫害者",
         "Notice harsh inner criticism and answer it with a calm, fair voice.",
         "留意内心严厉的批评，用平静而公正的声音回应它。"),
    16: ("Creating an Optimal Inner Model", "建立理想的内在模型",
         "Describe the caring, balanced person you want to become.",
         "描述你想成为的那个关爱他人、平衡稳定的人。"),
    17: ("Solving Personal Crises", "化解个人危机",
         "Break a current difficulty into small steps and take the first one.",
         "把眼前的困难分成几个小步骤，然后迈出第一步。"),
    18: ("Laughing at the Harmless Contradiction of Deep-Rooted Beliefs", "笑看根深蒂固信念中无害的矛盾",
         "Find a small, harmless contradiction in your own beliefs and smile at it.",
         "找出自己信念中一个无害的小矛盾，对它笑一笑。"),
    19: ("Changing Ideological Frameworks for Creative Freedom", "转变思维框架，获得创造的自由",
         "Question a rigid rule you follow and imagine a freer alternative.",
         "质疑一条你一直遵守的僵硬规则，想象一种更自由的做法。"),
    20: ("Affirmations", "自我肯定",
         "Repeat a few kind and encouraging sentences to yourself.",
         "对自己重复几句温暖而鼓励的话。"),
}

BRANCHES = {
    "sadness": {
        "protocols": [6, 11, 13, 17, 20],
        "questions": [
            {"id": "sad_past_events",
             "text": {"en": "In earlier sessions, did working through painful childhood events (protocol 6) leave you feeling worse?",
                      "zh": "在之前的练习中，处理童年痛苦经历（练习6）是否让你感觉更糟？"},
             "exclude_on_yes": [6]},
            {"id": "sad_crisis",
             "text": {"en": "Has tackling a personal crisis head-on (protocol 17) upset you before?",
                      "zh": "直接面对个人危机（练习17）以前是否让你感到不安？"},
             "exclude_on_yes": [17]},
        ],
    },
    "anger": {
        "protocols": [8, 11, 13, 18, 19],
        "questions": [
            {"id": "anger_muscles",
             "text": {"en": "Did loosening your facial and body muscles (protocol 8) make you more tense in the past?",
                      "zh": "以前放松面部和身体肌肉（练习8）是否反而让你更紧张？"},
             "exclude_on_yes": [8]},
            {"id": "anger_beliefs",
             "text": {"en": "Has examining your deep-rooted beliefs (protocols 18 and 19) made you angrier before?",
                      "zh": "审视根深蒂固的信念（练习18和19）以前是否让你更生气？"},
             "exclude_on_yes": [18, 19]},
        ],
    },
    "fear_anxiety": {
        "protocols": [6, 8, 11, 17, 20],
        "questions": [
            {"id": "fear_past_events",
             "text": {"en": "In earlier sessions, did recalling painful childhood events (protocol 6) increase your anxiety?",
                      "zh": "在之前的练习中，回想童年痛苦经历（练习6）是否加重了你的焦虑？"},
             "exclude_on_yes": [6]},
            {"id": "fear_affirmations",
             "text": {"en": "Have affirmations (protocol 20) felt uncomfortable or empty to you before?",
                      "zh": "自我肯定（练习20）以前是否让你觉得不自在或空洞？"},
             "exclude_on_yes": [20]},
        ],
    },
    "joy_contentment": {"protocols": [3, 4, 5, 7, 9], "questions": []},
}

EMOTIONS = ["fear_anxiety", "anger", "sadness", "joy_contentment"]

BASES = [
    ("It sounds like you are feeling anxious.", "听起来你感到焦虑。"),
    ("It sounds like you are feeling angry.", "听起来你感到很生气。"),
    ("It sounds like you are feeling sad.", "听起来你感到难过。"),
    ("It is good to hear that you are feeling happy.", "很高兴听到你心情愉快。"),
    ("Good, your anxiety has eased after the exercise.", "很好，练习之后你的焦虑缓解了。"),
    ("The exercise did not ease your anxiety.", "这个练习没有缓解你的焦虑。"),
    ("Good, you feel calmer than before.", "很好，你比之前平静了。"),
    ("You are still feeling angry after the exercise.", "练习之后你仍然感到生气。"),
    ("Good, you feel less sad now.", "很好，你现在没那么难过了。"),
    ("The exercise did not lift your sadness.", "这个练习没有减轻你的悲伤。"),
    ("Good, you feel even better now.", "很好，你现在感觉更好了。"),
    ("Your good mood has dropped a little.", "你的好心情有些低落了。"),
    ("Let us try another exercise.", "我们试试另一个练习吧。"),
    ("Take a deep breath before you begin.", "开始之前先深呼吸。"),
    ("You can stop the exercise at any time.", "你可以随时停止练习。"),
    ("Think about your childhood self.", "想一想童年的自己。"),
    ("Try to picture a happy memory.", "试着回想一段快乐的记忆。"),
    ("It is normal to feel this way.", "有这样的感受是正常的。"),
    ("Many people feel this way sometimes.", "很多人有时也会有这种感觉。"),
    ("Tell me more about what happened.", "再和我说说发生了什么。"),
    ("You have finished the exercise.", "你已经完成了练习。"),
    ("Please do this exercise every day.", "请每天做这个练习。"),
    ("Rest for a moment.", "休息一会儿。"),
    ("Be kind to yourself.", "对自己好一点。"),
    ("That was a difficult situation.", "那是一个困难的处境。"),
    ("You are not alone.", "你并不孤单。"),
    ("Notice how your body feels.", "留意你身体的感受。"),
    ("Try to relax your shoulders.", "试着放松你的肩膀。"),
    ("Speak to your childhood self gently.", "温柔地对童年的自己说话。"),
    ("Remember that feelings change over time.", "记住，感受会随着时间改变。"),
    ("You can come back whenever you need.", "你需要的时候随时可以回来。"),
    ("Write down how you feel.", "把你的感受写下来。"),
    ("Go for a walk outside.", "到外面散散步。"),
    ("Spend some time in nature.", "花点时间亲近大自然。"),
    ("Smile at yourself in the mirror.", "对着镜子里的自己微笑。"),
    ("Think of someone who cares about you.", "想一想关心你的人。"),
    ("It is fine to ask for help.", "寻求帮助是可以的。"),
    ("Try to sleep well tonight.", "今晚试着好好睡一觉。"),
    ("Focus on one small thing at a time.", "一次只专注于一件小事。"),
    ("You handled that well.", "你处理得很好。"),
    ("Let the feeling pass.", "让这种感受过去。"),
    ("Thank you for sharing that.", "谢谢你告诉我这些。"),
    ("Think about what you can control.", "想一想你能掌控的事情。"),
    ("You deserve care and kindness.", "你值得被关心和善待。"),
    ("We can continue when you are ready.", "等你准备好了我们可以继续。"),
]
assert len(BASES) == 45

ACK = {"fear_anxiety": 0, "anger": 1, "sadness": 2, "joy_contentment": 3}
CELLS = {
    "fear_anxiety": {"better": 4, "same_or_worse": 5},
    "anger": {"better": 6, "same_or_worse": 7},
    "sadness": {"better": 8, "same_or_worse": 9},
    "joy_contentment": {"better": 10, "same_or_worse": 11},
}
BASE_EMOTION = {**{v: k for k, v in ACK.items()},
                **{c: e for e, cells in CELLS.items() for c in cells.values()}}

SCRIPT = {
    "greet": ("Hello, I am here to guide you through Self-Attachment Technique exercises. How are you feeling today?",
              "你好，我会陪你练习自我依恋疗法。你今天感觉怎么样？"),
    "ask_feeling_again": ("How are you feeling now?", "你现在感觉怎么样？"),
    "confirm_emotion": ("I think you are feeling {emotion}. Is that right?", "我觉得你现在感到{emotion}，对吗？"),
    "select_emotion": ("Please choose the emotion that fits best: {emotions}.", "请选择最符合你的情绪：{emotions}。"),
    "classifier_fallback": ("I could not tell how you are feeling. Please choose the emotion that fits best: {emotions}.",
                            "我没能判断出你的感受。请选择最符合你的情绪：{emotions}。"),
    "unclear_yes_no": ("Sorry, please answer yes or no.", "抱歉，请回答是或不是。"),
    "recommend_intro": ("Here are protocols you could try: {protocols}. Choose one, or decline any you do not want.",
                        "你可以尝试以下练习：{protocols}。请选择一个，或拒绝你不想做的练习。"),
    "no_recommendation": ("There is no protocol left to recommend in this session.", "本次会话中已没有可以推荐的练习。"),
    "declined_ack": ("That is fine. Protocol {id} will not be suggested again in this session.",
                     "没关系，本次会话中不会再推荐练习{id}。"),
    "practice_intro": ("Please try protocol {id}: {title}. {body} When you are done, tell me whether you feel better.",
                       "请尝试练习{id}：{title}。{body}完成后告诉我你是否感觉好些。"),
    "ask_exclude_last": ("Would you like me to leave out protocol {id} for the rest of this session?",
                         "需要我在本次会话中不再推荐练习{id}吗？"),
    "excluded_ack": ("Protocol {id} is now left out for this session.", "本次会话中将不再推荐练习{id}。"),
    "kept_ack": ("Protocol {id} stays available.", "练习{id}仍然可以选择。"),
    "continue_or_end": ("Would you like to continue with another exercise?", "你想继续做其他练习吗？"),
    "goodbye": ("Thank you for practising today. Goodbye.", "谢谢你今天的练习，再见。"),
}

EMOTION_NAMES = {
    "en": {"fear_anxiety": "anxious", "anger": "angry", "sadness": "sad", "joy_contentment": "happy"},
    "zh": {"fear_anxiety": "焦虑", "anger": "愤怒", "sadness": "难过", "joy_contentment": "开心"},
}

YES_NO = {
    "en": {"yes": ["yes", "yeah", "yep", "sure", "ok", "okay", "correct", "right", "please"],
           "no": ["no", "nope", "not", "don", "wrong", "nah"]},
    "zh": {"yes": ["是", "对", "好", "嗯", "要", "行", "可"], "no": ["不", "没", "别", "否"]},
}

STOPWORDS = {
    "en": ["a", "an", "the", "and", "or", "but", "if", "of", "to", "in", "on", "at", "for", "with", "by",
           "from", "as", "is", "are", "was", "were", "be", "been", "am", "it", "its", "this", "that",
           "these", "those", "i", "you", "your", "yours", "we", "our", "they", "their", "he", "she",
           "his", "her", "me", "my", "us", "them", "do", "does", "did", "have", "has", "had", "will",
           "would", "can", "could", "should", "so", "very", "too", "just", "not", "no", "all", "about",
           "what", "when", "how", "there", "here", "than", "then", "feel", "feeling",
           ".", ",", "!", "?", ";", ":", "'", "\"", "-", "(", ")"],
    "zh": ["的", "了", "是", "在", "我", "你", "他", "她", "它", "们", "这", "那", "和", "与", "也",
           "都", "就", "又", "很", "吗", "呢", "吧", "啊", "着", "过", "把", "被", "对", "有", "一",
           "个", "不", "没", "会", "能", "要", "让", "给", "得", "地",
           "。", "，", "！", "？", "；", "：", "、", "“", "”", "（", "）"],
}

QUESTIONNAIRE = {
    "scale": {"min": 1, "max": 5, "agree_at_least": 4},
    "groups": [
        {"id": "emotion_recognition", "title": {"en": "Emotion recognition", "zh": "情绪识别"}},
        {"id": "response_quality", "title": {"en": "Response quality and empathy", "zh": "回应质量与共情"}},
        {"id": "overall_experience", "title": {"en": "Overall experience", "zh": "总体体验"}},
        {"id": "usefulness", "title": {"en": "Usefulness", "zh": "实用性"}},
    ],
    "items": [
        {"id": "q1", "group": "emotion_recognition",
         "text": {"en": "The chatbot recognised my emotions correctly.", "zh": "聊天机器人正确识别了我的情绪。"}},
        {"id": "q2", "group": "emotion_recognition",
         "text": {"en": "It was easy to correct the emotion when it was wrong.", "zh": "当情绪识别错误时，很容易更正。"}},
        {"id": "q3", "group": "response_quality",
         "text": {"en": "The chatbot's responses were fluent and natural.", "zh": "聊天机器人的回应流畅自然。"}},
        {"id": "q4", "group": "response_quality",
         "text": {"en": "The chatbot's responses conveyed empathy.", "zh": "聊天机器人的回应表达了共情。"}},
        {"id": "q5", "group": "overall_experience",
         "text": {"en": "I enjoyed using the chatbot.", "zh": "我喜欢使用这个聊天机器人。"}},
        {"id": "q6", "group": "overall_experience",
         "text": {"en": "The conversation was easy to follow.", "zh": "对话容易理解。"}},
        {"id": "q7", "group": "usefulness",
         "text": {"en": "The recommended protocols were suitable for me.", "zh": "推荐的练习适合我。"}},
        {"id": "q8", "group": "usefulness",
         "text": {"en": "I would use the chatbot to practise again.", "zh": "我会再次使用这个聊天机器人进行练习。"}},
    ],
}


def dump(name, obj):
    data = json.dumps(obj, ensure_ascii=False, indent=2) + "\n"
    (OUT / name).write_text(data, encoding="utf-8")
    return hashlib.sha256(data.encode("utf-8")).hexdigest()


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    group_of = {p: g for g, _, _, ps in GROUPS for p in ps}
    assert sorted(group_of) == list(range(1, 21))
    files = {}
    files["protocols.json"] = dump("protocols.json", {
        "version": 1,
        "groups": [{"id": g, "name": {"en": en, "zh": zh}, "protocols": ps} for g, en, zh, ps in GROUPS],
        "protocols": [{"id": i, "group": group_of[i],
                       "title": {"en": t_en, "zh": t_zh}, "body": {"en": b_en, "zh": b_zh}}
                      for i, (t_en, t_zh, b_en, b_zh) in sorted(PROTOCOLS.items())],
    })
    files["branches.json"] = dump("branches.json", {
        "version": 1,
        "fallback_group": 1,
        "branches": BRANCHES,
        "acknowledgement": ACK,
        "post_protocol": CELLS,
    })
    files["script.json"] = dump("script.json", {
        "version": 1,
        "utterances": {k: {"en": en, "zh": zh} for k, (en, zh) in SCRIPT.items()},
        "emotion_names": EMOTION_NAMES,
        "yes_no": YES_NO,
        "base_utterances": [
            {"class_id": i, "emotion": BASE_EMOTION.get(i, EMOTIONS[i % 4]), "en": en, "zh": zh}
            for i, (en, zh) in enumerate(BASES)
        ],
    })
    files["stopwords.json"] = dump("stopwords.json", STOPWORDS)
    files["questionnaire.json"] = dump("questionnaire.json", QUESTIONNAIRE)
    (OUT / "manifest.json").write_text(
        json.dumps({"version": 1, "sha256": files}, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
